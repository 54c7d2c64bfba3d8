//! Coined discrete-time quantum walks on d-regular graphs whose shift is a
//! Hermitian involution, the one-parameter family of local unitaries
//!
//! ```text
//! U(s) = exp(-i(pi/2) s (S - I)) exp(-i(pi/2) s (F - I)),   s in (0, 1]
//! ```
//!
//! which equals the walk step `SF` at `s = 1` and tends to the coined
//! continuous-time walk generated by `S + F - 2I` as `s -> 0`.
//!
//! Modules:
//!
//! - [`graphs`]: colored graphs (cycle, torus, hypercube) and the coined graph G'.
//! - [`operators`]: sparse shift, coin flip and Hamiltonian assembly.
//! - [`linalg`]: state vectors, dense eigensolvers and the `exp(-iHt)` propagators.
//! - [`walks`]: walk stepping, the interpolating family, limit convergence scans.
//! - [`search`]: marked-vertex search on the 2-D torus with `H = S - F`.
//! - [`symmetry`]: orbit bases, reduced operators and quotient graphs.

pub mod error;
pub mod exec;
pub mod graphs;
pub mod linalg;
pub mod operators;
pub mod search;
pub mod symmetry;
pub mod walks;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Tolerance for the Hermitian / unitary / involution tag checks.
pub const EXACT_TOL: f64 = 1e-12;

/// Formats a float with 17 significant digits, the precision used by every
/// text export.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}
