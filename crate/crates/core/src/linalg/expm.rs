//! Action of `exp(-iHt)` on a vector for Hermitian `H`.
//!
//! Two backends:
//!
//! - spectral synthesis from a dense eigendecomposition (small dimensions);
//! - a Chebyshev expansion on a known spectral enclosure `[lo, hi]`:
//!
//! ```text
//! exp(-iHt) = e^{-ict} [ J_0(rt) + 2 sum_{k>=1} (-i)^k J_k(rt) T_k((H - c)/r) ]
//! ```
//!
//! with `c = (lo + hi)/2`, `r = (hi - lo)/2`. Since `|T_k| <= 1` on the
//! enclosure, truncating after order `K` costs at most `2 sum_{k>K} |J_k(rt)|`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Mode;
use crate::linalg::eigen::{eigh_dense, SpectralData, DEFAULT_DENSE_CAP};
use crate::linalg::StateVector;
use crate::operators::SparseOperator;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Spectral up to the dense cap, polynomial above it.
    #[default]
    Auto,
    Spectral,
    Polynomial,
}

impl std::str::FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Backend::Auto),
            "spectral" => Ok(Backend::Spectral),
            "polynomial" | "chebyshev" => Ok(Backend::Polynomial),
            other => Err(Error::InvalidParameter(format!("unknown propagator backend '{other}'"))),
        }
    }
}

/// `J_0(x), ..., J_kmax(x)` by Miller's backward recurrence, normalized with
/// `J_0 + 2 sum J_2k = 1`.
pub fn bessel_j_sequence(x: f64, kmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let start = {
        let m = kmax.max((1.3 * ax) as usize + 60);
        m + (m % 2)
    };
    let mut j = vec![0.0f64; start + 2];
    j[start] = 1e-30;
    for k in (1..=start).rev() {
        j[k - 1] = (2.0 * k as f64 / ax) * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            for v in &mut j[k - 1..] {
                *v *= 1e-250;
            }
        }
    }
    let norm = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
    for k in 0..=kmax {
        let v = j[k] / norm;
        out[k] = if x < 0.0 && k % 2 == 1 { -v } else { v };
    }
    out
}

/// Chebyshev truncation order meeting `tol` for argument `x = r t`, with the
/// Bessel values it needs.
fn chebyshev_order(x: f64, tol: f64) -> (usize, Vec<f64>) {
    let ax = x.abs();
    let kmax = (1.3 * ax) as usize + 60;
    let j = bessel_j_sequence(ax, kmax);
    let mut tail = 0.0;
    let mut order = kmax;
    // tail(K) = 2 sum_{k > K} |J_k|; walk down while the bound still holds
    for k in (1..=kmax).rev() {
        let next_tail = tail + 2.0 * j[k].abs();
        if next_tail > 0.5 * tol {
            order = k;
            break;
        }
        tail = next_tail;
        order = k - 1;
    }
    let j = if x < 0.0 {
        j.iter()
            .enumerate()
            .map(|(k, v)| if k % 2 == 1 { -v } else { *v })
            .collect()
    } else {
        j
    };
    (order.max(1), j)
}

enum Kind {
    Spectral(SpectralData),
    Polynomial { center: f64, radius: f64 },
}

/// Reusable `exp(-iHt)` for one Hermitian operator and one tolerance.
pub struct Propagator<'a> {
    h: &'a SparseOperator,
    tol: f64,
    mode: Mode,
    kind: Kind,
}

impl<'a> Propagator<'a> {
    pub fn new(h: &'a SparseOperator, tol: f64, backend: Backend) -> Result<Self> {
        Self::with_cap(h, tol, backend, DEFAULT_DENSE_CAP)
    }

    pub fn with_cap(h: &'a SparseOperator, tol: f64, backend: Backend, cap: usize) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
        }
        h.ensure_hermitian()?;
        let spectral = match backend {
            Backend::Auto => h.dim() <= cap,
            Backend::Spectral => true,
            Backend::Polynomial => false,
        };
        let kind = if spectral {
            Kind::Spectral(eigh_dense(h, cap)?)
        } else {
            let (lo, hi) = h.spectral_bounds();
            Kind::Polynomial {
                center: 0.5 * (lo + hi),
                radius: 0.5 * (hi - lo),
            }
        };
        Ok(Propagator {
            h,
            tol,
            mode: Mode::Sequential,
            kind,
        })
    }

    /// Execution mode for the sparse products of the polynomial backend.
    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn backend(&self) -> Backend {
        match self.kind {
            Kind::Spectral(_) => Backend::Spectral,
            Kind::Polynomial { .. } => Backend::Polynomial,
        }
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn spectral_data(&self) -> Option<&SpectralData> {
        match &self.kind {
            Kind::Spectral(sd) => Some(sd),
            Kind::Polynomial { .. } => None,
        }
    }

    /// Chebyshev order the polynomial backend would use for time `t`.
    pub fn polynomial_order(&self, t: f64) -> Option<usize> {
        match self.kind {
            Kind::Polynomial { radius, .. } if radius > 0.0 && t != 0.0 => {
                Some(chebyshev_order(radius * t, self.tol).0)
            }
            _ => None,
        }
    }

    pub fn apply(&self, t: f64, psi: &StateVector) -> Result<StateVector> {
        psi.ensure_dim(self.h.dim())?;
        if t == 0.0 {
            return Ok(psi.clone());
        }
        match &self.kind {
            Kind::Spectral(sd) => {
                let mut coeffs = sd.project(psi.as_slice());
                for (c, &lam) in coeffs.iter_mut().zip(&sd.eigenvalues) {
                    *c *= C64::from_polar(1.0, -lam * t);
                }
                Ok(StateVector::new(sd.synthesize(&coeffs)))
            }
            &Kind::Polynomial { center, radius } => Ok(self.chebyshev(t, psi, center, radius)),
        }
    }

    fn chebyshev(&self, t: f64, psi: &StateVector, center: f64, radius: f64) -> StateVector {
        let global = C64::from_polar(1.0, -center * t);
        if radius == 0.0 {
            return psi.clone().scaled(global);
        }
        let (order, j) = chebyshev_order(radius * t, self.tol);
        let n = psi.dim();
        let inv_r = 1.0 / radius;
        // y = (H - c) x / r
        let apply_scaled = |x: &[C64], y: &mut [C64]| {
            self.h.matvec_into(x, y, self.mode);
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi = (*yi - xi * center) * inv_r;
            }
        };
        let minus_i = C64::new(0.0, -1.0);
        let mut prev: Vec<C64> = psi.as_slice().to_vec();
        let mut cur = vec![C64::new(0.0, 0.0); n];
        apply_scaled(&prev, &mut cur);
        let mut acc: Vec<C64> = prev.iter().map(|p| p * j[0]).collect();
        let c1 = minus_i * (2.0 * j[1]);
        for (a, c) in acc.iter_mut().zip(&cur) {
            *a += c1 * c;
        }
        let mut next = vec![C64::new(0.0, 0.0); n];
        let mut phase = minus_i;
        for jk in j.iter().take(order + 1).skip(2) {
            apply_scaled(&cur, &mut next);
            for (nx, p) in next.iter_mut().zip(&prev) {
                *nx = 2.0 * *nx - p;
            }
            phase *= minus_i;
            let ck = phase * (2.0 * jk);
            for (a, x) in acc.iter_mut().zip(&next) {
                *a += ck * x;
            }
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut next);
        }
        StateVector::new(acc).scaled(global)
    }
}

/// `exp(-iHt) psi` to within `tol` in the 2-norm, backend chosen by dimension.
pub fn expm_apply(h: &SparseOperator, t: f64, psi: &StateVector, tol: f64) -> Result<StateVector> {
    if t == 0.0 {
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
        }
        h.ensure_hermitian()?;
        psi.ensure_dim(h.dim())?;
        return Ok(psi.clone());
    }
    Propagator::new(h, tol, Backend::Auto)?.apply(t, psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{build_cycle, build_torus, PairingMode};
    use crate::operators::{build_coin_flip, build_hamiltonian, build_shift, CoinSpec, HamiltonianForm};

    #[test]
    fn bessel_reference_values() {
        // Abramowitz & Stegun table 9.1
        let j = bessel_j_sequence(1.0, 3);
        assert!((j[0] - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((j[1] - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((j[2] - 0.114_903_484_931_900_5).abs() < 1e-15);
        let j = bessel_j_sequence(10.0, 1);
        assert!((j[0] + 0.245_935_764_451_348_3).abs() < 1e-14);
        assert!((j[1] - 0.043_472_746_168_861_44).abs() < 1e-14);
        let jn = bessel_j_sequence(-10.0, 1);
        assert_eq!(jn[1], -j[1]);
    }

    #[test]
    fn bessel_large_argument_sum_rule() {
        let j = bessel_j_sequence(400.0, 600);
        let s: f64 = j[0] * j[0] + 2.0 * j[1..].iter().map(|v| v * v).sum::<f64>();
        assert!((s - 1.0).abs() < 1e-12, "{s}");
    }

    fn torus_h(marked: bool) -> SparseOperator {
        let g = build_torus(4, PairingMode::FlipFlop).unwrap();
        let s = build_shift(&g).unwrap();
        let coin = if marked { CoinSpec::grover().with_marked(0) } else { CoinSpec::grover() };
        let f = build_coin_flip(&g, &coin).unwrap();
        build_hamiltonian(&s, &f, HamiltonianForm::SMinusF).unwrap()
    }

    #[test]
    fn zero_time_is_identity() {
        let h = torus_h(true);
        let psi = StateVector::basis(64, 3);
        assert_eq!(expm_apply(&h, 0.0, &psi, 1e-10).unwrap(), psi);
    }

    #[test]
    fn zero_operator_leaves_state() {
        let g = build_cycle(4).unwrap();
        let s = build_shift(&g).unwrap();
        let h = build_hamiltonian(&s, &s, HamiltonianForm::SMinusF).unwrap();
        let psi = StateVector::basis(8, 2);
        for backend in [Backend::Spectral, Backend::Polynomial] {
            let p = Propagator::new(&h, 1e-12, backend).unwrap();
            assert!(p.apply(3.7, &psi).unwrap().distance(&psi) < 1e-13);
        }
    }

    #[test]
    fn backends_agree_and_compose() {
        let h = torus_h(true);
        let psi = StateVector::uniform(64);
        let sp = Propagator::new(&h, 1e-12, Backend::Spectral).unwrap();
        let po = Propagator::new(&h, 1e-12, Backend::Polynomial).unwrap();
        for &t in &[0.3, 1.0, 7.5, -2.0] {
            let a = sp.apply(t, &psi).unwrap();
            let b = po.apply(t, &psi).unwrap();
            assert!(a.distance(&b) < 1e-11, "t={t}: {}", a.distance(&b));
            assert!((b.norm() - 1.0).abs() < 1e-11);
        }
        let two = po.apply(1.25, &po.apply(0.75, &psi).unwrap()).unwrap();
        let one = po.apply(2.0, &psi).unwrap();
        assert!(two.distance(&one) < 2e-12);
    }

    #[test]
    fn rejects_bad_tolerance_and_non_hermitian() {
        let h = torus_h(false);
        assert!(Propagator::new(&h, 0.0, Backend::Auto).is_err());
        let a = SparseOperator::from_triplets(2, [(0, 1, C64::new(1.0, 0.0))]);
        assert!(matches!(
            expm_apply(&a, 1.0, &StateVector::basis(2, 0), 1e-8),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn order_grows_with_time() {
        let h = torus_h(true);
        let po = Propagator::new(&h, 1e-10, Backend::Polynomial).unwrap();
        let a = po.polynomial_order(1.0).unwrap();
        let b = po.polynomial_order(50.0).unwrap();
        assert!(a < b && b > 100, "{a} {b}");
    }
}
