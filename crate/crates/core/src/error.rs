use thiserror::Error;

/// Errors raised by graph construction, operator assembly and the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} must be even (got {value}); a proper edge coloring of the cycles requires an even length")]
    OddSize { what: &'static str, value: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("graph failed validation: {0}")]
    InvalidGraph(String),

    #[error("{which} is not Hermitian-unitary (max deviation {deviation:.3e})")]
    CoinNotHermitianUnitary { which: String, deviation: f64 },

    #[error("coin has dimension {found}, expected {expected}")]
    CoinDimension { expected: usize, found: usize },

    #[error("unsupported coin: {0}")]
    UnsupportedCoin(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (max |A - A^H| = {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("operator is not a Hermitian involution (deviation {deviation:.3e})")]
    NotInvolution { deviation: f64 },

    #[error("dimension {dim} exceeds the dense cap {cap}; use the polynomial propagator instead")]
    DenseCapExceeded { dim: usize, cap: usize },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("state lies outside the orbit span (residual {residual:.3e})")]
    OutsideSpan { residual: f64 },

    #[error("operator leaks out of the orbit span (residual {residual:.3e})")]
    SpanLeak { residual: f64 },

    #[error("permutation image is not a bijection on {dim} labels")]
    NotBijective { dim: usize },

    #[error("matrix is not column-stochastic: {0}")]
    NotStochastic(String),

    #[error("no eigenvalue passed the overlap threshold {threshold}")]
    NoQualifyingEigenvalue { threshold: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
