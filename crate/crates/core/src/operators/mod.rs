//! Shift, coin-flip and Hamiltonian operators.
//!
//! `S` permutes basis labels along the graph pairing; `F` acts blockwise on the
//! coin space of every vertex. Both are Hermitian involutions, which is what
//! makes `exp(-i(pi/2)(A - I)) = A` and the interpolating family possible.

mod sparse;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use sparse::{SparseOperator, TagDeviations, Tags};

use crate::error::{Error, Result};
use crate::graphs::ColoredGraph;
use crate::linalg::DenseMatrix;
use crate::{C64, EXACT_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoinKind {
    /// `2|S_c><S_c| - I`.
    Grover,
    /// `(1, 1; 1, -1) / sqrt 2`, degree 2 only.
    Hadamard,
    Custom(DenseMatrix),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkedCoin {
    MinusIdentity,
    Custom(DenseMatrix),
}

/// Coin used at every vertex, optionally replaced at one marked vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoinSpec {
    pub kind: CoinKind,
    pub marked: Option<(usize, MarkedCoin)>,
}

impl CoinSpec {
    pub fn grover() -> Self {
        CoinSpec {
            kind: CoinKind::Grover,
            marked: None,
        }
    }

    pub fn hadamard() -> Self {
        CoinSpec {
            kind: CoinKind::Hadamard,
            marked: None,
        }
    }

    pub fn custom(m: DenseMatrix) -> Self {
        CoinSpec {
            kind: CoinKind::Custom(m),
            marked: None,
        }
    }

    /// Marks `vertex` with the `-I` coin.
    pub fn with_marked(self, vertex: usize) -> Self {
        self.with_marked_coin(vertex, MarkedCoin::MinusIdentity)
    }

    pub fn with_marked_coin(mut self, vertex: usize, coin: MarkedCoin) -> Self {
        self.marked = Some((vertex, coin));
        self
    }

    pub fn marked_vertex(&self) -> Option<usize> {
        self.marked.as_ref().map(|(v, _)| *v)
    }

    /// The coin applied at unmarked vertices.
    pub fn base_coin(&self, d: usize) -> Result<DenseMatrix> {
        match &self.kind {
            CoinKind::Grover => Ok(grover_coin(d)),
            CoinKind::Hadamard => {
                if d != 2 {
                    return Err(Error::CoinDimension { expected: d, found: 2 });
                }
                let h = std::f64::consts::FRAC_1_SQRT_2;
                Ok(DenseMatrix::from_real(2, 2, &[h, h, h, -h]))
            }
            CoinKind::Custom(m) => {
                if m.rows() != d || m.cols() != d {
                    return Err(Error::CoinDimension {
                        expected: d,
                        found: m.rows(),
                    });
                }
                Ok(m.clone())
            }
        }
    }

    pub fn marked_coin(&self, d: usize) -> Result<Option<(usize, DenseMatrix)>> {
        match &self.marked {
            None => Ok(None),
            Some((v, MarkedCoin::MinusIdentity)) => {
                Ok(Some((*v, DenseMatrix::identity(d).scaled(C64::new(-1.0, 0.0)))))
            }
            Some((v, MarkedCoin::Custom(m))) => {
                if m.rows() != d || m.cols() != d {
                    return Err(Error::CoinDimension {
                        expected: d,
                        found: m.rows(),
                    });
                }
                Ok(Some((*v, m.clone())))
            }
        }
    }

    pub fn coin_at(&self, v: usize, d: usize) -> Result<DenseMatrix> {
        match self.marked_coin(d)? {
            Some((x, m)) if x == v => Ok(m),
            _ => self.base_coin(d),
        }
    }

    /// Checks that every coin in the spec is `d x d`, Hermitian and unitary.
    pub fn validate(&self, d: usize) -> Result<()> {
        let check = |which: String, m: &DenseMatrix| -> Result<()> {
            let deviation = m.hermitian_deviation().max(m.unitary_deviation());
            if deviation > EXACT_TOL {
                return Err(Error::CoinNotHermitianUnitary { which, deviation });
            }
            Ok(())
        };
        check("base coin".into(), &self.base_coin(d)?)?;
        if let Some((v, m)) = self.marked_coin(d)? {
            check(format!("marked coin at vertex {v}"), &m)?;
        }
        Ok(())
    }
}

impl FromStr for CoinSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "grover" => Ok(CoinSpec::grover()),
            "hadamard" => Ok(CoinSpec::hadamard()),
            "dft" | "fourier" => Err(Error::UnsupportedCoin(format!(
                "'{s}' is not Hermitian; only Hermitian-unitary coins have a continuous limit"
            ))),
            other => Err(Error::UnsupportedCoin(format!(
                "unknown coin '{other}' (expected grover or hadamard)"
            ))),
        }
    }
}

/// Grover diffusion `2/d - delta_ij`.
pub fn grover_coin(d: usize) -> DenseMatrix {
    let off = 2.0 / d as f64;
    DenseMatrix::from_fn(d, d, |i, j| {
        C64::new(if i == j { off - 1.0 } else { off }, 0.0)
    })
}

/// `S = sum |pairing(i, v)><i, v|`.
pub fn build_shift(graph: &ColoredGraph) -> Result<SparseOperator> {
    graph.ensure_valid()?;
    let one = C64::new(1.0, 0.0);
    let op = SparseOperator::from_triplets(
        graph.dim(),
        graph.pairing_flat().iter().enumerate().map(|(k, &p)| (p, k, one)),
    );
    Ok(op.with_verified_tags(true, true, true)?.with_spectral_bounds(-1.0, 1.0))
}

/// Block-diagonal coin flip: `C_0` on every vertex, the marked coin at the marked vertex.
pub fn build_coin_flip(graph: &ColoredGraph, spec: &CoinSpec) -> Result<SparseOperator> {
    let (n, d) = (graph.num_vertices(), graph.degree());
    spec.validate(d)?;
    let base = spec.base_coin(d)?;
    let marked = spec.marked_coin(d)?;
    if let Some((x, _)) = &marked {
        if *x >= n {
            return Err(Error::InvalidParameter(format!(
                "marked vertex {x} outside [0, {n})"
            )));
        }
    }
    let mut trips = Vec::with_capacity(n * d * d);
    for v in 0..n {
        let c = match &marked {
            Some((x, m)) if *x == v => m,
            _ => &base,
        };
        for i in 0..d {
            for j in 0..d {
                trips.push((i * n + v, j * n + v, c[(i, j)]));
            }
        }
    }
    let op = SparseOperator::from_triplets(graph.dim(), trips);
    Ok(op.with_verified_tags(true, true, true)?.with_spectral_bounds(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianForm {
    /// `S + F - 2I`, generator of the `s -> 0` limit; spectrum in `[-4, 0]`.
    #[serde(rename = "s_plus_f_minus_2i")]
    SPlusFMinus2I,
    /// `S + F`, same dynamics up to the global phase `e^{2it}`.
    SPlusF,
    /// `S - F`, the search Hamiltonian; spectrum in `[-2, 2]`.
    SMinusF,
}

impl FromStr for HamiltonianForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "s_plus_f_minus_2i" => Ok(HamiltonianForm::SPlusFMinus2I),
            "s_plus_f" => Ok(HamiltonianForm::SPlusF),
            "s_minus_f" => Ok(HamiltonianForm::SMinusF),
            other => Err(Error::InvalidParameter(format!("unknown hamiltonian form '{other}'"))),
        }
    }
}

impl fmt::Display for HamiltonianForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HamiltonianForm::SPlusFMinus2I => "s_plus_f_minus_2i",
            HamiltonianForm::SPlusF => "s_plus_f",
            HamiltonianForm::SMinusF => "s_minus_f",
        })
    }
}

fn ensure_hermitian_involution(op: &SparseOperator) -> Result<()> {
    let t = op.tags();
    if t.hermitian && t.involution {
        return Ok(());
    }
    let dev = op.hermitian_deviation().max(op.involution_deviation());
    if dev > EXACT_TOL {
        return Err(Error::NotInvolution { deviation: dev });
    }
    Ok(())
}

pub fn build_hamiltonian(
    shift: &SparseOperator,
    coin_flip: &SparseOperator,
    form: HamiltonianForm,
) -> Result<SparseOperator> {
    shift.ensure_same_dim(coin_flip)?;
    ensure_hermitian_involution(shift)?;
    ensure_hermitian_involution(coin_flip)?;
    let (b, shift_by, lo, hi) = match form {
        HamiltonianForm::SPlusFMinus2I => (1.0, -2.0, -4.0, 0.0),
        HamiltonianForm::SPlusF => (1.0, 0.0, -2.0, 2.0),
        HamiltonianForm::SMinusF => (-1.0, 0.0, -2.0, 2.0),
    };
    let h = shift.combine(1.0, coin_flip, b, shift_by)?;
    Ok(h.with_verified_tags(true, false, false)?.with_spectral_bounds(lo, hi))
}
