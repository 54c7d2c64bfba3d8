//! State vectors, dense eigensolvers and the `exp(-iHt)` propagators.

mod dense;
mod eigen;
mod expm;
mod state;

pub use dense::DenseMatrix;
pub use eigen::{eigh_dense, eigh_matrix, unitary_eigen, SpectralData, UnitaryEigen, DEFAULT_DENSE_CAP};
pub use expm::{bessel_j_sequence, expm_apply, Backend, Propagator};
pub use state::StateVector;
pub(crate) use state::axpy;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::SparseOperator;

/// `A psi`.
pub fn matvec(a: &SparseOperator, psi: &StateVector) -> Result<StateVector> {
    a.matvec(psi)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma2Report {
    pub dim: usize,
    pub eigenpairs: usize,
    /// `max_j ||(S - F)^2 |j> - 4 sin^2(phi_j / 2) |j>||`.
    pub max_residual: f64,
    /// Largest `||SF|j> - e^{i phi_j}|j>||`, a sanity check on the eigenpairs themselves.
    pub max_eigen_residual: f64,
    pub tolerance: f64,
}

impl Lemma2Report {
    pub fn passed(&self) -> bool {
        self.max_residual <= self.tolerance
    }
}

/// Every eigenvector of the unitary `SF` with phase `phi` is an eigenvector of
/// `(S - F)^2` with eigenvalue `4 sin^2(phi / 2)`; measures how well that holds.
pub fn lemma2_check(shift: &SparseOperator, coin_flip: &SparseOperator, cap: usize) -> Result<Lemma2Report> {
    shift.ensure_same_dim(coin_flip)?;
    let dim = shift.dim();
    if dim > cap {
        return Err(Error::DenseCapExceeded { dim, cap });
    }
    let sf = shift.matmul(coin_flip)?.to_dense();
    let diff = shift.combine(1.0, coin_flip, -1.0, 0.0)?;
    let diff_sq = diff.matmul(&diff)?;
    let ue = unitary_eigen(&sf)?;
    let mut max_residual = 0.0f64;
    let mut max_eigen_residual = 0.0f64;
    for j in 0..dim {
        let v = ue.vectors.column(j);
        let lam = 4.0 * (ue.phases[j] / 2.0).sin().powi(2);
        let r: f64 = diff_sq
            .apply(&v)
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b * lam).norm_sqr())
            .sum();
        max_residual = max_residual.max(r.sqrt());
        let e: f64 = sf
            .apply(&v)
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b * ue.eigenvalues[j]).norm_sqr())
            .sum();
        max_eigen_residual = max_eigen_residual.max(e.sqrt());
    }
    Ok(Lemma2Report {
        dim,
        eigenpairs: dim,
        max_residual,
        max_eigen_residual,
        tolerance: 1e-8,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{build_cycle, build_torus, PairingMode};
    use crate::operators::{build_coin_flip, build_shift, CoinSpec};
    use crate::C64;

    #[test]
    fn lemma2_cycle4_hadamard() {
        let g = build_cycle(4).unwrap();
        let s = build_shift(&g).unwrap();
        let f = build_coin_flip(&g, &CoinSpec::hadamard()).unwrap();
        let r = lemma2_check(&s, &f, DEFAULT_DENSE_CAP).unwrap();
        assert_eq!(r.eigenpairs, 8);
        assert!(r.max_residual <= 1e-10, "{r:?}");
        assert!(r.max_eigen_residual <= 1e-10, "{r:?}");
    }

    #[test]
    fn lemma2_extreme_phases() {
        // F = S: SF = I, every phase is 0 and (S - F)^2 = 0
        let g = build_cycle(4).unwrap();
        let s = build_shift(&g).unwrap();
        let r = lemma2_check(&s, &s, DEFAULT_DENSE_CAP).unwrap();
        assert!(r.max_residual < 1e-14);
        // F = -S: SF = -I, phase pi and (S - F)^2 = 4I
        let neg = s.scaled(C64::new(-1.0, 0.0));
        let r = lemma2_check(&s, &neg, DEFAULT_DENSE_CAP).unwrap();
        assert!(r.max_residual < 1e-12);
    }

    #[test]
    fn lemma2_cap() {
        let g = build_torus(4, PairingMode::FlipFlop).unwrap();
        let s = build_shift(&g).unwrap();
        let f = build_coin_flip(&g, &CoinSpec::grover()).unwrap();
        assert!(matches!(lemma2_check(&s, &f, 32), Err(Error::DenseCapExceeded { .. })));
    }

    #[test]
    fn matvec_identity_and_dims() {
        let id = SparseOperator::identity(5);
        let psi = StateVector::new((0..5).map(|k| C64::new(k as f64, -1.0)).collect());
        assert_eq!(matvec(&id, &psi).unwrap(), psi);
        assert!(matches!(
            matvec(&id, &StateVector::zeros(4)),
            Err(Error::DimensionMismatch { expected: 5, found: 4 })
        ));
    }
}
