//! Walk stepping: the coined step `U = SF`, the interpolating family `U(s)`,
//! convergence of `U(s)^n` to the continuous limit, and the classical
//! random-walk analogue.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{self, Mode};
use crate::graphs::ColoredGraph;
use crate::linalg::{axpy, Backend, DenseMatrix, Propagator, StateVector, DEFAULT_DENSE_CAP};
use crate::operators::{build_hamiltonian, HamiltonianForm, SparseOperator};
use crate::C64;

/// One coined step `S (F psi)`.
pub fn dtqw_step(shift: &SparseOperator, coin_flip: &SparseOperator, psi: &StateVector) -> Result<StateVector> {
    shift.ensure_same_dim(coin_flip)?;
    let f_psi = coin_flip.matvec(psi)?;
    shift.matvec(&f_psi)
}

/// `n` coined steps.
pub fn dtqw_evolve(
    shift: &SparseOperator,
    coin_flip: &SparseOperator,
    psi: &StateVector,
    steps: usize,
) -> Result<StateVector> {
    let mut cur = psi.clone();
    for _ in 0..steps {
        cur = dtqw_step(shift, coin_flip, &cur)?;
    }
    Ok(cur)
}

/// `exp(-i(pi/2) s (A - I)) = phase * (cos I - i sin A)` for a Hermitian involution `A`.
#[derive(Debug, Clone, Copy)]
struct HalfTurn {
    phase: C64,
    cos: f64,
    sin: f64,
}

impl HalfTurn {
    fn new(s: f64) -> Self {
        if s == 1.0 {
            // exact at the endpoint so that U(1) = SF holds bit for bit
            return HalfTurn {
                phase: C64::new(0.0, 1.0),
                cos: 0.0,
                sin: 1.0,
            };
        }
        let (sin, cos) = (FRAC_PI_2 * s).sin_cos();
        HalfTurn {
            phase: C64::from_polar(1.0, FRAC_PI_2 * s),
            cos,
            sin,
        }
    }

    /// `phase * (cos x - i sin a_x)`
    fn combine(&self, x: &[C64], a_x: &[C64]) -> Vec<C64> {
        let c = self.phase * self.cos;
        let d = self.phase * C64::new(0.0, -self.sin);
        x.iter().zip(a_x).map(|(xi, ai)| c * xi + d * ai).collect()
    }
}

/// One member `U(s)` of the interpolating family.
#[derive(Debug, Clone, Copy)]
pub struct FamilyStep<'a> {
    s: f64,
    shift: &'a SparseOperator,
    coin_flip: &'a SparseOperator,
}

impl<'a> FamilyStep<'a> {
    pub fn new(s: f64, shift: &'a SparseOperator, coin_flip: &'a SparseOperator) -> Result<Self> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::InvalidParameter(format!("s must lie in (0, 1], got {s}")));
        }
        shift.ensure_same_dim(coin_flip)?;
        Ok(FamilyStep { s, shift, coin_flip })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn dim(&self) -> usize {
        self.shift.dim()
    }

    /// Applies the coin factor then the shift factor, each in closed form.
    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        psi.ensure_dim(self.dim())?;
        let ht = HalfTurn::new(self.s);
        let f_psi = self.coin_flip.apply(psi.as_slice());
        let mid = ht.combine(psi.as_slice(), &f_psi);
        let s_mid = self.shift.apply(&mid);
        Ok(StateVector::new(ht.combine(&mid, &s_mid)))
    }

    pub fn evolve(&self, psi: &StateVector, steps: usize) -> Result<StateVector> {
        let mut cur = psi.clone();
        for _ in 0..steps {
            cur = self.apply(&cur)?;
        }
        Ok(cur)
    }

    /// Dense matrix of `U(s)`, built column by column.
    pub fn dense_matrix(&self) -> Result<DenseMatrix> {
        let n = self.dim();
        if n > DEFAULT_DENSE_CAP {
            return Err(Error::DenseCapExceeded { dim: n, cap: DEFAULT_DENSE_CAP });
        }
        let mut m = DenseMatrix::zeros(n, n);
        for k in 0..n {
            let col = self.apply(&StateVector::basis(n, k))?;
            m.set_column(k, col.as_slice());
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalityReport {
    pub s: f64,
    /// Largest `|U(s)_{ab}|` outside the supports of `I`, `S`, `F`, `SF`.
    pub max_off_mask: f64,
    pub mask_entries: usize,
    pub tolerance: f64,
}

impl LocalityReport {
    pub fn passed(&self) -> bool {
        self.max_off_mask <= self.tolerance
    }
}

/// Checks that `U(s)` only couples labels reachable through `I`, `S`, `F` or `SF`.
pub fn locality_check(step: &FamilyStep<'_>, graph: &ColoredGraph) -> Result<LocalityReport> {
    let n = step.dim();
    if n != graph.dim() {
        return Err(Error::DimensionMismatch { expected: graph.dim(), found: n });
    }
    let u = step.dense_matrix()?;
    let sf = step.shift.matmul(step.coin_flip)?;
    let mut mask = vec![false; n * n];
    for k in 0..n {
        mask[k * n + k] = true;
    }
    for op in [step.shift, step.coin_flip, &sf] {
        for (r, c, _) in op.triplets() {
            mask[r * n + c] = true;
        }
    }
    let mut max_off_mask = 0.0f64;
    for r in 0..n {
        for c in 0..n {
            if !mask[r * n + c] {
                max_off_mask = max_off_mask.max(u[(r, c)].norm());
            }
        }
    }
    Ok(LocalityReport {
        s: step.s,
        max_off_mask,
        mask_entries: mask.iter().filter(|&&m| m).count(),
        tolerance: 1e-12,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub s: f64,
    pub n: usize,
    /// Continuous time `(pi/2) s n`.
    pub t: f64,
    pub error: f64,
}

/// `err(s) = || U(s)^n psi0 - exp(-i (S + F - 2I) (pi/2) s n) psi0 ||` with `n = round(tau / s)`.
pub fn convergence_scan(
    shift: &SparseOperator,
    coin_flip: &SparseOperator,
    psi0: &StateVector,
    tau: f64,
    s_list: &[f64],
    mode: Mode,
) -> Result<Vec<ConvergenceRow>> {
    if s_list.is_empty() {
        return Err(Error::InvalidParameter("empty s list".into()));
    }
    if let Some(bad) = s_list.iter().find(|&&s| !(s > 0.0 && s <= 1.0)) {
        return Err(Error::InvalidParameter(format!("s must lie in (0, 1], got {bad}")));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    psi0.ensure_dim(shift.dim())?;
    let h = build_hamiltonian(shift, coin_flip, HamiltonianForm::SPlusFMinus2I)?;
    let prop = Propagator::new(&h, 1e-12, Backend::Auto)?;
    exec::map(mode, s_list, |&s| {
        let n = (tau / s).round() as usize;
        let step = FamilyStep::new(s, shift, coin_flip)?;
        let discrete = step.evolve(psi0, n)?;
        let t = FRAC_PI_2 * s * n as f64;
        let limit = prop.apply(t, psi0)?;
        Ok(ConvergenceRow {
            s,
            n,
            t,
            error: discrete.distance(&limit),
        })
    })
    .into_iter()
    .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignFlipReport {
    pub steps: usize,
    /// Largest per-label probability difference over all steps.
    pub max_probability_diff: f64,
    /// Largest `|psi_{-F}(n) - (-1)^n psi_F(n)|`.
    pub max_phase_deviation: f64,
}

impl SignFlipReport {
    pub fn passed(&self) -> bool {
        self.max_probability_diff <= 1e-12 && self.max_phase_deviation <= 1e-12
    }
}

/// Runs the walk with `F` and with `-F` side by side.
pub fn sign_flip_invariance(
    shift: &SparseOperator,
    coin_flip: &SparseOperator,
    psi0: &StateVector,
    steps: usize,
) -> Result<SignFlipReport> {
    let neg = coin_flip.scaled(C64::new(-1.0, 0.0));
    let mut a = psi0.clone();
    let mut b = psi0.clone();
    let mut max_probability_diff = 0.0f64;
    let mut max_phase_deviation = 0.0f64;
    for n in 1..=steps {
        a = dtqw_step(shift, coin_flip, &a)?;
        b = dtqw_step(shift, &neg, &b)?;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            max_probability_diff = max_probability_diff.max((x.norm_sqr() - y.norm_sqr()).abs());
            max_phase_deviation = max_phase_deviation.max((y - x * sign).norm());
        }
    }
    Ok(SignFlipReport {
        steps,
        max_probability_diff,
        max_phase_deviation,
    })
}

/// Probability of finding the walker at vertex `v`: total weight on `(*, v)`.
pub fn vertex_probability(psi: &StateVector, v: usize, n: usize) -> f64 {
    psi.as_slice()
        .iter()
        .skip(v)
        .step_by(n)
        .map(|a| a.norm_sqr())
        .sum()
}

pub fn vertex_distribution(psi: &StateVector, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (k, a) in psi.as_slice().iter().enumerate() {
        out[k % n] += a.norm_sqr();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassicalRow {
    pub eps: f64,
    pub steps: usize,
    /// Total-variation distance to `exp((M - I) tau) p0`.
    pub tv_error: f64,
}

fn check_stochastic(m: &[Vec<f64>], p0: &[f64]) -> Result<()> {
    let n = p0.len();
    if m.len() != n || m.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.len(),
        });
    }
    for j in 0..n {
        let mut col = 0.0;
        for row in m {
            if row[j] < -1e-12 {
                return Err(Error::NotStochastic(format!("negative entry in column {j}")));
            }
            col += row[j];
        }
        if (col - 1.0).abs() > 1e-12 {
            return Err(Error::NotStochastic(format!("column {j} sums to {col}")));
        }
    }
    if p0.iter().any(|&p| p < -1e-12) || (p0.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::NotStochastic("p0 is not a probability vector".into()));
    }
    Ok(())
}

fn real_matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

fn real_apply(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

/// Dense `exp(A)` by scaling and squaring a Taylor series.
pub fn expm_real_dense(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let norm = a
        .iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scale = 0.5f64.powi(squarings);
    let scaled: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|x| x * scale).collect()).collect();
    let mut result: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut term = result.clone();
    for k in 1..=30 {
        term = real_matmul(&term, &scaled);
        term.iter_mut().flatten().for_each(|x| *x /= k as f64);
        for (r, t) in result.iter_mut().zip(&term) {
            for (x, y) in r.iter_mut().zip(t) {
                *x += y;
            }
        }
    }
    for _ in 0..squarings {
        result = real_matmul(&result, &result);
    }
    result
}

/// Compares the lazy chain `(eps M + (1 - eps) I)^{round(tau/eps)} p0` with the
/// continuous-time solution `exp((M - I) tau) p0`.
pub fn classical_limit_demo(m: &[Vec<f64>], p0: &[f64], tau: f64, eps_list: &[f64]) -> Result<Vec<ClassicalRow>> {
    check_stochastic(m, p0)?;
    if let Some(bad) = eps_list.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1], got {bad}")));
    }
    let n = p0.len();
    let generator: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| tau * (m[i][j] - if i == j { 1.0 } else { 0.0 })).collect())
        .collect();
    let exact = real_apply(&expm_real_dense(&generator), p0);
    Ok(eps_list
        .iter()
        .map(|&eps| {
            let lazy: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..n).map(|j| eps * m[i][j] + if i == j { 1.0 - eps } else { 0.0 }).collect())
                .collect();
            let steps = (tau / eps).round() as usize;
            let mut p = p0.to_vec();
            for _ in 0..steps {
                p = real_apply(&lazy, &p);
            }
            let tv_error = 0.5 * p.iter().zip(&exact).map(|(a, b)| (a - b).abs()).sum::<f64>();
            ClassicalRow { eps, steps, tv_error }
        })
        .collect())
}

/// `psi - i (pi/2) s (S + F - 2I) psi`, the first-order expansion of `U(s) psi`.
pub fn first_order_step(
    shift: &SparseOperator,
    coin_flip: &SparseOperator,
    psi: &StateVector,
    s: f64,
) -> Result<StateVector> {
    let h = build_hamiltonian(shift, coin_flip, HamiltonianForm::SPlusFMinus2I)?;
    let mut out = psi.as_slice().to_vec();
    axpy(C64::new(0.0, -FRAC_PI_2 * s), &h.apply(psi.as_slice()), &mut out);
    Ok(StateVector::new(out))
}
