use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::BasisLabel;
use crate::C64;

/// Complex amplitudes over the coin-major `(coin, vertex)` basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(amps: Vec<C64>) -> Self {
        StateVector { amps }
    }

    pub fn zeros(dim: usize) -> Self {
        StateVector::new(vec![C64::new(0.0, 0.0); dim])
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut s = StateVector::zeros(dim);
        s.amps[k] = C64::new(1.0, 0.0);
        s
    }

    pub fn label(n: usize, d: usize, label: BasisLabel) -> Self {
        StateVector::basis(n * d, label.flat(n))
    }

    /// `|S_c, S_v>`, the uniform superposition over all labels.
    pub fn uniform(dim: usize) -> Self {
        let a = 1.0 / (dim as f64).sqrt();
        StateVector::new(vec![C64::new(a, 0.0); dim])
    }

    /// `|S_c> (x) |v>`.
    pub fn uniform_coin_at(n: usize, d: usize, v: usize) -> Self {
        let a = 1.0 / (d as f64).sqrt();
        let mut s = StateVector::zeros(n * d);
        for c in 0..d {
            s.amps[c * n + v] = C64::new(a, 0.0);
        }
        s
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.amps
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(mut self) -> Self {
        let nrm = self.norm();
        if nrm > 0.0 {
            self.amps.iter_mut().for_each(|a| *a /= nrm);
        }
        self
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `||self - other||_2`.
    pub fn distance(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn scaled(mut self, c: C64) -> Self {
        self.amps.iter_mut().for_each(|a| *a *= c);
        self
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn ensure_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: self.dim(),
            });
        }
        Ok(())
    }
}

impl Index<usize> for StateVector {
    type Output = C64;
    fn index(&self, k: usize) -> &C64 {
        &self.amps[k]
    }
}

impl IndexMut<usize> for StateVector {
    fn index_mut(&mut self, k: usize) -> &mut C64 {
        &mut self.amps[k]
    }
}

/// `y = a x + y`
pub(crate) fn axpy(a: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}
