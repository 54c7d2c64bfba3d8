use std::ops::Range;

use faer::Side;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, StateVector};
use crate::operators::SparseOperator;
use crate::{C64, EXACT_TOL};

/// Largest dimension handled by the dense eigensolvers unless the caller says otherwise.
pub const DEFAULT_DENSE_CAP: usize = 8192;

/// Spectrum of a Hermitian operator; column `j` of `vectors` is the eigenvector of `eigenvalues[j]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    pub vectors: DenseMatrix,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `phi` with `lambda = 2 sin(phi / 2)`, defined when `|lambda| <= 2`.
    pub fn phi(&self, j: usize) -> Option<f64> {
        let lam = self.eigenvalues[j];
        (lam.abs() <= 2.0 + 1e-12).then(|| 2.0 * (lam / 2.0).clamp(-1.0, 1.0).asin())
    }

    pub fn eigenvector(&self, j: usize) -> StateVector {
        StateVector::new(self.vectors.column(j))
    }

    /// Coefficients `<u_j | psi>`.
    pub fn project(&self, psi: &[C64]) -> Vec<C64> {
        let n = self.dim();
        let mut out = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            let row = self.vectors.row(i);
            let p = psi[i];
            for (o, u) in out.iter_mut().zip(row) {
                *o += u.conj() * p;
            }
        }
        out
    }

    /// `sum_j coeffs[j] u_j`.
    pub fn synthesize(&self, coeffs: &[C64]) -> Vec<C64> {
        self.vectors.apply(coeffs)
    }

    /// `max_j ||A u_j - lambda_j u_j||`.
    pub fn max_residual(&self, a: &SparseOperator) -> f64 {
        (0..self.dim())
            .map(|j| {
                let u = self.vectors.column(j);
                let au = a.apply(&u);
                au.iter()
                    .zip(&u)
                    .map(|(x, y)| (x - y * self.eigenvalues[j]).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    pub fn orthonormality_deviation(&self) -> f64 {
        self.vectors.unitary_deviation()
    }

    /// Index ranges of eigenvalues that agree within `tol` (consecutive, since sorted).
    pub fn clusters(&self, tol: f64) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for j in 1..=self.dim() {
            if j == self.dim() || self.eigenvalues[j] - self.eigenvalues[j - 1] > tol {
                out.push(start..j);
                start = j;
            }
        }
        out
    }

    /// Norm of the projection of `psi` onto the eigenspace spanned by `range`.
    pub fn subspace_overlap(&self, coeffs: &[C64], range: Range<usize>) -> f64 {
        coeffs[range].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

fn phase_normalize_columns(m: &mut DenseMatrix) {
    for j in 0..m.cols() {
        let col = m.column(j);
        let norm = col.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let lead = col.iter().find(|c| c.norm() > 1e-10 * norm.max(1.0)).copied();
        if let Some(lead) = lead {
            let phase = lead.conj() / (lead.norm() * norm);
            let fixed: Vec<C64> = col.iter().map(|c| c * phase).collect();
            m.set_column(j, &fixed);
        }
    }
}

/// Full eigendecomposition of a Hermitian matrix, ascending eigenvalues, each
/// eigenvector's first nonzero component real-positive.
pub fn eigh_matrix(a: &DenseMatrix) -> Result<SpectralData> {
    if !a.is_square() {
        return Err(Error::InvalidParameter("eigh of a non-square matrix".into()));
    }
    let deviation = a.hermitian_deviation();
    if deviation > EXACT_TOL * a.max_abs().max(1.0) {
        return Err(Error::NotHermitian { deviation });
    }
    let n = a.rows();
    let (eigenvalues, mut vectors) = if a.is_real() {
        let evd = a
            .to_faer_real()
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let s = evd.S().column_vector();
        let u = evd.U();
        (
            (0..n).map(|i| s[i]).collect::<Vec<f64>>(),
            DenseMatrix::from_fn(n, n, |i, j| C64::new(u[(i, j)], 0.0)),
        )
    } else {
        let evd = a
            .to_faer()
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let s = evd.S().column_vector();
        let u = evd.U();
        (
            (0..n).map(|i| s[i].re).collect::<Vec<f64>>(),
            DenseMatrix::from_fn(n, n, |i, j| u[(i, j)]),
        )
    };
    phase_normalize_columns(&mut vectors);
    Ok(SpectralData {
        eigenvalues,
        vectors,
    })
}

/// Dense eigendecomposition of a Hermitian sparse operator of dimension at most `cap`.
pub fn eigh_dense(a: &SparseOperator, cap: usize) -> Result<SpectralData> {
    if a.dim() > cap {
        return Err(Error::DenseCapExceeded { dim: a.dim(), cap });
    }
    a.ensure_hermitian()?;
    eigh_matrix(&a.to_dense())
}

/// Eigenpairs `U|j> = e^{i phi_j}|j>` of a unitary matrix, phases in `(-pi, pi]`, ascending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitaryEigen {
    pub phases: Vec<f64>,
    pub eigenvalues: Vec<C64>,
    pub vectors: DenseMatrix,
}

pub fn unitary_eigen(u: &DenseMatrix) -> Result<UnitaryEigen> {
    if !u.is_square() {
        return Err(Error::InvalidParameter("eigen of a non-square matrix".into()));
    }
    let n = u.rows();
    let evd = if u.is_real() {
        u.to_faer_real().eigen()
    } else {
        u.to_faer().eigen()
    }
    .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let v = evd.U();
    let mut order: Vec<usize> = (0..n).collect();
    let phase = |i: usize| s[i].arg();
    order.sort_by(|&a, &b| phase(a).total_cmp(&phase(b)));
    let mut vectors = DenseMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    for j in 0..n {
        let col = vectors.column(j);
        let norm = col.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let col: Vec<C64> = col.iter().map(|c| c / norm).collect();
        vectors.set_column(j, &col);
    }
    phase_normalize_columns(&mut vectors);
    Ok(UnitaryEigen {
        phases: order.iter().map(|&i| phase(i)).collect(),
        eigenvalues: order.iter().map(|&i| s[i]).collect(),
        vectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{build_torus, PairingMode};
    use crate::operators::{build_coin_flip, build_hamiltonian, build_shift, CoinSpec, HamiltonianForm};

    #[test]
    fn shift_spectrum_is_plus_minus_one() {
        let g = build_torus(4, PairingMode::FlipFlop).unwrap();
        let s = build_shift(&g).unwrap();
        let sd = eigh_dense(&s, DEFAULT_DENSE_CAP).unwrap();
        for &l in &sd.eigenvalues {
            assert!((l.abs() - 1.0).abs() < 1e-12, "{l}");
        }
        assert!(sd.max_residual(&s) < 1e-10);
        assert!(sd.orthonormality_deviation() < 1e-10);
    }

    #[test]
    fn unmarked_s_minus_f_has_uniform_null_vector() {
        let g = build_torus(4, PairingMode::FlipFlop).unwrap();
        let s = build_shift(&g).unwrap();
        let f = build_coin_flip(&g, &CoinSpec::grover()).unwrap();
        let h = build_hamiltonian(&s, &f, HamiltonianForm::SMinusF).unwrap();
        let sd = eigh_dense(&h, DEFAULT_DENSE_CAP).unwrap();
        let u = StateVector::uniform(64);
        let coeffs = sd.project(u.as_slice());
        let zero = sd
            .clusters(1e-9)
            .into_iter()
            .find(|r| sd.eigenvalues[r.start].abs() < 1e-9)
            .expect("zero eigenvalue");
        assert!((sd.subspace_overlap(&coeffs, zero) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cap_and_hermiticity_enforced() {
        let g = build_torus(4, PairingMode::FlipFlop).unwrap();
        let s = build_shift(&g).unwrap();
        assert!(matches!(eigh_dense(&s, 10), Err(Error::DenseCapExceeded { dim: 64, cap: 10 })));
        let m = DenseMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(eigh_matrix(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn complex_hermitian_path() {
        let m = DenseMatrix::from_rows(&[
            vec![C64::new(1.0, 0.0), C64::new(0.0, -1.0)],
            vec![C64::new(0.0, 1.0), C64::new(1.0, 0.0)],
        ]);
        let sd = eigh_matrix(&m).unwrap();
        assert!((sd.eigenvalues[0] - 0.0).abs() < 1e-14);
        assert!((sd.eigenvalues[1] - 2.0).abs() < 1e-14);
        for j in 0..2 {
            let lead = sd.vectors[(0, j)];
            assert!(lead.im.abs() < 1e-15 && lead.re > 0.0);
        }
    }

    #[test]
    fn unitary_eigen_of_rotation() {
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let m = DenseMatrix::from_real(2, 2, &[c, -s, s, c]);
        let ue = unitary_eigen(&m).unwrap();
        assert!((ue.phases[0] + 0.3).abs() < 1e-14);
        assert!((ue.phases[1] - 0.3).abs() < 1e-14);
        for j in 0..2 {
            let v = ue.vectors.column(j);
            let mv = m.apply(&v);
            let r: f64 = mv.iter().zip(&v).map(|(a, b)| (a - b * ue.eigenvalues[j]).norm_sqr()).sum();
            assert!(r.sqrt() < 1e-14);
        }
    }
}
