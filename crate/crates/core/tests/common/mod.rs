#![allow(dead_code)]

use nalgebra::DMatrix;
use qwalk::graphs::ColoredGraph;
use qwalk::linalg::StateVector;
use qwalk::operators::SparseOperator;
use qwalk::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn to_nalgebra(a: &SparseOperator) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(a.dim(), a.dim());
    for (r, c, v) in a.triplets() {
        m[(r, c)] = v;
    }
    m
}

pub fn to_vector(psi: &StateVector) -> nalgebra::DVector<C64> {
    nalgebra::DVector::from_column_slice(psi.as_slice())
}

/// `exp(-iHt)` by scaling and squaring a truncated Taylor series.
pub fn taylor_expm(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    let n = h.nrows();
    let a = h * C64::new(0.0, -t);
    let norm = (0..n)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as i32 } else { 0 };
    let a = a * C64::new(0.5f64.powi(squarings), 0.0);
    let mut result = DMatrix::<C64>::identity(n, n);
    let mut term = result.clone();
    for k in 1..=24 {
        term = &term * &a / C64::new(k as f64, 0.0);
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

pub fn taylor_expm_apply(h: &SparseOperator, t: f64, psi: &StateVector) -> StateVector {
    let out = taylor_expm(&to_nalgebra(h), t) * to_vector(psi);
    StateVector::new(out.iter().copied().collect())
}

/// Dense `SF` assembled straight from the pairing and the per-vertex coin blocks.
pub fn dense_walk(graph: &ColoredGraph, coin: &dyn Fn(usize) -> DMatrix<C64>) -> DMatrix<C64> {
    let (n, d) = (graph.num_vertices(), graph.degree());
    let dim = n * d;
    let mut s = DMatrix::<C64>::zeros(dim, dim);
    for (k, &p) in graph.pairing_flat().iter().enumerate() {
        s[(p, k)] = C64::new(1.0, 0.0);
    }
    let mut f = DMatrix::<C64>::zeros(dim, dim);
    for v in 0..n {
        let c = coin(v);
        for i in 0..d {
            for j in 0..d {
                f[(i * n + v, j * n + v)] = c[(i, j)];
            }
        }
    }
    s * f
}

pub fn grover(d: usize) -> DMatrix<C64> {
    DMatrix::from_fn(d, d, |i, j| C64::new(2.0 / d as f64 - if i == j { 1.0 } else { 0.0 }, 0.0))
}

pub fn hadamard() -> DMatrix<C64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_row_slice(2, 2, &[C64::new(h, 0.0), C64::new(h, 0.0), C64::new(h, 0.0), C64::new(-h, 0.0)])
}

pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sparse random Hermitian matrix with entries of order one.
pub fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize, density: f64) -> SparseOperator {
    let mut trips = Vec::new();
    for i in 0..dim {
        trips.push((i, i, C64::new(rng.random_range(-1.0..1.0), 0.0)));
        for j in i + 1..dim {
            if rng.random::<f64>() < density {
                let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                trips.push((i, j, z));
                trips.push((j, i, z.conj()));
            }
        }
    }
    SparseOperator::from_triplets(dim, trips)
}

pub fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> StateVector {
    StateVector::new(
        (0..dim)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect(),
    )
    .normalized()
}

/// `J_k(x) = (1/pi) int_0^pi cos(k tau - x sin tau) d tau` by composite Simpson.
pub fn bessel_quadrature(k: usize, x: f64) -> f64 {
    let m = 4000;
    let h = std::f64::consts::PI / m as f64;
    let f = |tau: f64| (k as f64 * tau - x * tau.sin()).cos();
    let mut sum = f(0.0) + f(std::f64::consts::PI);
    for i in 1..m {
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    sum * h / 3.0 / std::f64::consts::PI
}
