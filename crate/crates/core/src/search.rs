//! Marked-vertex search on the `side x side` torus with the coined
//! continuous-time walk `H = S - F`, where `F` is the Grover coin everywhere
//! except `-I` at the marked vertex `x`.
//!
//! Starting from the uniform state `|S_c, S_v>`, the probability at `x` peaks
//! near `t = pi / (2 theta_alpha)`, with `theta_alpha` the smallest positive
//! eigenvalue of `S - F` whose eigenvector overlaps the start state.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{self, Mode};
use crate::graphs::{build_torus, ColoredGraph, PairingMode};
use crate::linalg::{eigh_dense, unitary_eigen, Backend, Propagator, StateVector, DEFAULT_DENSE_CAP};
use crate::operators::{build_coin_flip, build_hamiltonian, build_shift, CoinSpec, HamiltonianForm, SparseOperator};
use crate::walks::{dtqw_step, vertex_probability};
use crate::C64;

/// Default overlap threshold for picking out the `w_{+-alpha}` eigenvectors.
pub const DEFAULT_OVERLAP_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct SearchInstance {
    pub side: usize,
    pub mode: PairingMode,
    pub marked: Option<usize>,
    pub graph: ColoredGraph,
    pub shift: SparseOperator,
    pub coin_flip: SparseOperator,
    /// `S - F`.
    pub hamiltonian: SparseOperator,
}

impl SearchInstance {
    /// Torus with the Grover coin and `-I` at `marked`.
    pub fn setup(side: usize, marked: usize, mode: PairingMode) -> Result<Self> {
        Self::build(side, Some(marked), mode)
    }

    /// Same torus and coin, nothing marked.
    pub fn setup_unmarked(side: usize, mode: PairingMode) -> Result<Self> {
        Self::build(side, None, mode)
    }

    fn build(side: usize, marked: Option<usize>, mode: PairingMode) -> Result<Self> {
        let graph = build_torus(side, mode)?;
        let n = graph.num_vertices();
        let coin = match marked {
            Some(x) if x >= n => {
                return Err(Error::InvalidParameter(format!("marked vertex {x} outside [0, {n})")))
            }
            Some(x) => CoinSpec::grover().with_marked(x),
            None => CoinSpec::grover(),
        };
        let shift = build_shift(&graph)?;
        let coin_flip = build_coin_flip(&graph, &coin)?;
        let hamiltonian = build_hamiltonian(&shift, &coin_flip, HamiltonianForm::SMinusF)?;
        Ok(SearchInstance {
            side,
            mode,
            marked,
            graph,
            shift,
            coin_flip,
            hamiltonian,
        })
    }

    /// Number of vertices N.
    pub fn n(&self) -> usize {
        self.side * self.side
    }

    pub fn dim(&self) -> usize {
        4 * self.n()
    }

    pub fn initial_state(&self) -> StateVector {
        StateVector::uniform(self.dim())
    }

    /// `|S_c, x>`; the zero vector when nothing is marked.
    pub fn marked_state(&self) -> StateVector {
        match self.marked {
            Some(x) => StateVector::uniform_coin_at(self.n(), 4, x),
            None => StateVector::zeros(self.dim()),
        }
    }

    fn require_marked(&self) -> Result<usize> {
        self.marked
            .ok_or_else(|| Error::InvalidParameter("search needs a marked vertex".into()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Claim1Report {
    /// `||(S - F)|S_c,S_v> - (2/sqrt N)|S_c,x>||`.
    pub residual: f64,
    /// Measured `<S_c,x|(S - F)|S_c,S_v>`.
    pub coefficient: f64,
    pub expected_coefficient: f64,
}

impl Claim1Report {
    pub fn passed(&self) -> bool {
        self.residual <= 1e-12 && (self.coefficient - self.expected_coefficient).abs() <= 1e-12
    }
}

/// `(S - F)|S_c,S_v> = (2/sqrt N)|S_c,x>`.
pub fn claim1_check(inst: &SearchInstance) -> Result<Claim1Report> {
    let u = inst.initial_state();
    let hu = inst.hamiltonian.matvec(&u)?;
    let expected = if inst.marked.is_some() {
        2.0 / (inst.n() as f64).sqrt()
    } else {
        0.0
    };
    let target = inst.marked_state().scaled(C64::new(expected, 0.0));
    let coefficient = match inst.marked {
        Some(_) => inst.marked_state().inner(&hu).re,
        None => 0.0,
    };
    Ok(Claim1Report {
        residual: hu.distance(&target),
        coefficient,
        expected_coefficient: expected,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaReport {
    pub theta_alpha: f64,
    /// `alpha = 2 asin(theta_alpha / 2)`.
    pub alpha: f64,
    /// The negative partner eigenvalue (closest to zero passing the threshold).
    pub theta_minus: Option<f64>,
    /// `|| P_{+theta} |S_c,S_v> ||` over the (possibly degenerate) eigenspace.
    pub overlap_uniform_plus: f64,
    pub overlap_uniform_minus: f64,
    pub overlap_marked_plus: f64,
    pub overlap_marked_minus: f64,
    pub degeneracy: usize,
    /// Another positive eigenspace within `2 theta_alpha` also passes the threshold.
    pub ambiguous: bool,
    pub threshold: f64,
}

/// Finds `theta_alpha` from the dense spectrum of `S - F`.
pub fn extract_alpha(inst: &SearchInstance, threshold: f64) -> Result<AlphaReport> {
    inst.require_marked()?;
    let sd = eigh_dense(&inst.hamiltonian, DEFAULT_DENSE_CAP)?;
    let cu = sd.project(inst.initial_state().as_slice());
    let cx = sd.project(inst.marked_state().as_slice());
    let clusters = sd.clusters(1e-9);
    let value = |r: &std::ops::Range<usize>| sd.eigenvalues[r.clone()].iter().sum::<f64>() / r.len() as f64;
    let passing: Vec<_> = clusters
        .iter()
        .filter(|r| sd.subspace_overlap(&cu, (*r).clone()) > threshold)
        .collect();
    let plus = passing
        .iter()
        .find(|r| value(r) > 1e-9)
        .ok_or(Error::NoQualifyingEigenvalue { threshold })?;
    let minus = passing.iter().rev().find(|r| value(r) < -1e-9);
    let theta = value(plus);
    let ambiguous = passing
        .iter()
        .any(|r| r.start != plus.start && value(r) > 1e-9 && value(r) < 2.0 * theta);
    Ok(AlphaReport {
        theta_alpha: theta,
        alpha: 2.0 * (theta / 2.0).clamp(-1.0, 1.0).asin(),
        theta_minus: minus.map(|r| value(r)),
        overlap_uniform_plus: sd.subspace_overlap(&cu, (*plus).clone()),
        overlap_uniform_minus: minus.map_or(0.0, |r| sd.subspace_overlap(&cu, (*r).clone())),
        overlap_marked_plus: sd.subspace_overlap(&cx, (*plus).clone()),
        overlap_marked_minus: minus.map_or(0.0, |r| sd.subspace_overlap(&cx, (*r).clone())),
        degeneracy: plus.len(),
        ambiguous,
        threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CtqwConfig {
    pub t_max: f64,
    pub dt: f64,
    /// Per-sample propagator tolerance.
    pub tol: f64,
    pub backend: Backend,
    pub mode: Mode,
}

impl CtqwConfig {
    /// Sampling step `0.01 sqrt N` and window `[0, t_max]`.
    pub fn for_side(side: usize, t_max: f64) -> Self {
        CtqwConfig {
            t_max,
            dt: 0.01 * side as f64,
            tol: 1e-10,
            backend: Backend::Polynomial,
            mode: Mode::Sequential,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CtqwRun {
    pub t_peak: f64,
    pub p_peak: f64,
    /// `(t, p_x(t))` on the sampling grid.
    pub curve: Vec<(f64, f64)>,
    /// Largest pairwise difference of the coin amplitudes `<i,x|Psi(t)>` over all samples.
    pub max_coin_asymmetry: f64,
    /// Largest `|<Psi(t)|H|Psi(t)> - <Psi(0)|H|Psi(0)>|`.
    pub max_energy_drift: f64,
    pub max_norm_drift: f64,
    pub backend: Backend,
}

impl CtqwRun {
    pub fn coin_symmetric(&self) -> bool {
        self.max_coin_asymmetry <= 1e-10
    }
}

fn coin_asymmetry(psi: &StateVector, n: usize, x: usize) -> f64 {
    let a: Vec<C64> = (0..4).map(|c| psi[c * n + x]).collect();
    let mut m = 0.0f64;
    for i in 0..4 {
        for j in i + 1..4 {
            m = m.max((a[i] - a[j]).norm());
        }
    }
    m
}

fn energy(h: &SparseOperator, psi: &StateVector) -> f64 {
    psi.inner(&StateVector::new(h.apply(psi.as_slice()))).re
}

/// Evolves `|S_c,S_v>` under `exp(-i(S - F)t)` and records `p_x(t)`.
pub fn run_ctqw_search(inst: &SearchInstance, cfg: &CtqwConfig) -> Result<CtqwRun> {
    let x = inst.require_marked()?;
    if !(cfg.dt > 0.0) || !(cfg.t_max >= 0.0) || !cfg.t_max.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "empty time grid (t_max = {}, dt = {})",
            cfg.t_max, cfg.dt
        )));
    }
    let n = inst.n();
    let h = &inst.hamiltonian;
    let prop = Propagator::new(h, cfg.tol, cfg.backend)?.with_mode(cfg.mode);
    let samples = (cfg.t_max / cfg.dt + 1e-9).floor() as usize + 1;

    let mut psi = inst.initial_state();
    let e0 = energy(h, &psi);
    let mut curve = Vec::with_capacity(samples);
    let mut max_coin_asymmetry = 0.0f64;
    let mut max_energy_drift = 0.0f64;
    let mut max_norm_drift = 0.0f64;
    let mut best = (0usize, f64::NEG_INFINITY);
    let mut before_best = psi.clone();
    let mut prev = psi.clone();
    for k in 0..samples {
        if k > 0 {
            prev = psi;
            psi = prop.apply(cfg.dt, &prev)?;
        }
        let t = k as f64 * cfg.dt;
        let p = vertex_probability(&psi, x, n);
        curve.push((t, p));
        max_coin_asymmetry = max_coin_asymmetry.max(coin_asymmetry(&psi, n, x));
        max_energy_drift = max_energy_drift.max((energy(h, &psi) - e0).abs());
        max_norm_drift = max_norm_drift.max((psi.norm() - 1.0).abs());
        if p > best.1 {
            best = (k, p);
            before_best = prev.clone();
        }
    }
    let allowed = samples as f64 * cfg.tol + 1e-10;
    if max_norm_drift > allowed {
        return Err(Error::InvalidParameter(format!(
            "propagator drifted: norm error {max_norm_drift:.3e} exceeds {allowed:.3e}"
        )));
    }

    // golden-section refinement on [t_{k-1}, t_{k+1}], propagating from psi(t_{k-1})
    let (k, p_sampled) = best;
    let (lo, from) = if k == 0 {
        (0.0, inst.initial_state())
    } else {
        ((k - 1) as f64 * cfg.dt, before_best)
    };
    let hi = ((k + 1) as f64 * cfg.dt).min(cfg.t_max);
    let p_at = |t: f64| -> Result<f64> { Ok(vertex_probability(&prop.apply(t - lo, &from)?, x, n)) };
    let (mut a, mut b) = (lo, hi);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut pc, mut pd) = (p_at(c)?, p_at(d)?);
    for _ in 0..40 {
        if pc > pd {
            b = d;
            d = c;
            pd = pc;
            c = b - g * (b - a);
            pc = p_at(c)?;
        } else {
            a = c;
            c = d;
            pc = pd;
            d = a + g * (b - a);
            pd = p_at(d)?;
        }
    }
    let (t_ref, p_ref) = if pc > pd { (c, pc) } else { (d, pd) };
    let (t_peak, p_peak) = if p_ref > p_sampled {
        (t_ref, p_ref)
    } else {
        (k as f64 * cfg.dt, p_sampled)
    };
    Ok(CtqwRun {
        t_peak,
        p_peak,
        curve,
        max_coin_asymmetry,
        max_energy_drift,
        max_norm_drift,
        backend: prop.backend(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DtqwRun {
    pub step_peak: usize,
    pub p_peak: f64,
    /// `p_x` after each step, starting with step 0.
    pub curve: Vec<f64>,
}

/// Iterates `U = SF` from `|S_c,S_v>`. Use at least `ceil(4 sqrt(N ln N))` steps
/// to see the first peak.
pub fn run_dtqw_search(inst: &SearchInstance, max_steps: usize) -> Result<DtqwRun> {
    let x = inst.require_marked()?;
    let n = inst.n();
    let mut psi = inst.initial_state();
    let mut curve = vec![vertex_probability(&psi, x, n)];
    for _ in 0..max_steps {
        psi = dtqw_step(&inst.shift, &inst.coin_flip, &psi)?;
        curve.push(vertex_probability(&psi, x, n));
    }
    let (step_peak, p_peak) = curve
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, p)| if p > acc.1 { (k, p) } else { acc });
    Ok(DtqwRun {
        step_peak,
        p_peak,
        curve,
    })
}

pub fn recommended_dtqw_steps(n: usize) -> usize {
    let n = n as f64;
    (4.0 * (n * n.ln()).sqrt()).ceil() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseRelationReport {
    pub checked: usize,
    pub skipped_zero_phase: usize,
    /// `max_j |<j|S_c,S_v> + i e^{i phi_j/2} / (sqrt N sin(phi_j/2)) <j|S_c,x>|`.
    pub max_residual: f64,
}

/// Relation between the overlaps of every `SF` eigenvector with the start and marked states.
pub fn phase_relation_check(inst: &SearchInstance) -> Result<PhaseRelationReport> {
    inst.require_marked()?;
    if inst.dim() > DEFAULT_DENSE_CAP {
        return Err(Error::DenseCapExceeded {
            dim: inst.dim(),
            cap: DEFAULT_DENSE_CAP,
        });
    }
    let sf = inst.shift.matmul(&inst.coin_flip)?.to_dense();
    let ue = unitary_eigen(&sf)?;
    let u = inst.initial_state();
    let xs = inst.marked_state();
    let sqrt_n = (inst.n() as f64).sqrt();
    let mut checked = 0;
    let mut skipped = 0;
    let mut max_residual = 0.0f64;
    for j in 0..inst.dim() {
        let phi = ue.phases[j];
        let half_sin = (phi / 2.0).sin();
        if half_sin.abs() < 1e-6 {
            skipped += 1;
            continue;
        }
        let v = StateVector::new(ue.vectors.column(j));
        let a = v.inner(&u);
        let b = v.inner(&xs);
        let factor = C64::new(0.0, 1.0) * C64::from_polar(1.0, phi / 2.0) / (sqrt_n * half_sin);
        max_residual = max_residual.max((a + factor * b).norm());
        checked += 1;
    }
    Ok(PhaseRelationReport {
        checked,
        skipped_zero_phase: skipped,
        max_residual,
    })
}

/// Spectral and time-domain analysis of one instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchAnalysis {
    pub side: usize,
    pub n: usize,
    pub alpha: AlphaReport,
    pub run: CtqwRun,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanOptions {
    pub tol: f64,
    pub threshold: f64,
    pub backend: Backend,
    /// Sampling step as a multiple of `sqrt N`.
    pub dt_factor: f64,
    /// Window as a multiple of the predicted peak time `pi / (2 theta_alpha)`.
    pub window: f64,
    pub mode: Mode,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            tol: 1e-10,
            threshold: DEFAULT_OVERLAP_THRESHOLD,
            backend: Backend::Polynomial,
            dt_factor: 0.01,
            window: 2.0,
            mode: Mode::Parallel,
        }
    }
}

/// Full analysis of the instance marked at vertex 0.
pub fn analyze(side: usize, pairing: PairingMode, opts: &ScanOptions) -> Result<SearchAnalysis> {
    let inst = SearchInstance::setup(side, 0, pairing)?;
    let alpha = extract_alpha(&inst, opts.threshold)?;
    let predicted = PI / (2.0 * alpha.theta_alpha);
    let cfg = CtqwConfig {
        t_max: opts.window * predicted,
        dt: opts.dt_factor * side as f64,
        tol: opts.tol,
        backend: opts.backend,
        mode: Mode::Sequential,
    };
    let run = run_ctqw_search(&inst, &cfg)?;
    Ok(SearchAnalysis {
        side,
        n: inst.n(),
        alpha,
        run,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanValues {
    pub theta_alpha: f64,
    pub alpha: f64,
    pub t_peak: f64,
    pub p_peak: f64,
    pub t_over_sqrt_n: f64,
    pub p_times_log_n: f64,
    /// `t_peak / p_peak`: expected total time with `O(1/p)` repetitions.
    pub cost: f64,
}

impl ScanValues {
    pub fn from_analysis(a: &SearchAnalysis) -> Self {
        let n = a.n as f64;
        ScanValues {
            theta_alpha: a.alpha.theta_alpha,
            alpha: a.alpha.alpha,
            t_peak: a.run.t_peak,
            p_peak: a.run.p_peak,
            t_over_sqrt_n: a.run.t_peak / n.sqrt(),
            p_times_log_n: a.run.p_peak * n.ln(),
            cost: a.run.t_peak / a.run.p_peak,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub side: usize,
    pub n: usize,
    pub result: std::result::Result<ScanValues, String>,
}

/// One row per side; a failing side produces an error row without aborting the scan.
pub fn scaling_scan(sides: &[usize], pairing: PairingMode, opts: &ScanOptions) -> Result<Vec<ScanRow>> {
    if sides.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter("sides must be sorted ascending".into()));
    }
    Ok(exec::map(opts.mode, sides, |&side| ScanRow {
        side,
        n: side * side,
        result: analyze(side, pairing, opts)
            .map(|a| ScanValues::from_analysis(&a))
            .map_err(|e| e.to_string()),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn setup_shapes() {
        let inst = SearchInstance::setup(2, 0, PairingMode::FlipFlop).unwrap();
        assert_eq!((inst.n(), inst.dim()), (4, 16));
        let inst = SearchInstance::setup(4, 0, PairingMode::FlipFlop).unwrap();
        let minus_blocks = (0..16)
            .filter(|&v| (0..4).all(|i| (0..4).all(|j| {
                let want = if i == j { -1.0 } else { 0.0 };
                inst.coin_flip.get(i * 16 + v, j * 16 + v) == C64::new(want, 0.0)
            })))
            .count();
        assert_eq!(minus_blocks, 1);
        assert!(SearchInstance::setup(4, 16, PairingMode::FlipFlop).is_err());
        assert!(SearchInstance::setup(5, 0, PairingMode::FlipFlop).is_err());
    }

    #[test]
    fn claim1_small() {
        let r = claim1_check(&SearchInstance::setup(2, 1, PairingMode::FlipFlop).unwrap()).unwrap();
        assert!((r.expected_coefficient - 1.0).abs() < 1e-15);
        assert!(r.passed(), "{r:?}");
        let r = claim1_check(&SearchInstance::setup(4, 3, PairingMode::EdgeColored).unwrap()).unwrap();
        assert_eq!(r.expected_coefficient, 0.5);
        assert!(r.residual <= 1e-14, "{r:?}");
        let r = claim1_check(&SearchInstance::setup_unmarked(4, PairingMode::FlipFlop).unwrap()).unwrap();
        assert!(r.residual <= 1e-15);
    }

    #[test]
    fn alpha_side4_is_order_one() {
        let inst = SearchInstance::setup(4, 0, PairingMode::FlipFlop).unwrap();
        let a = extract_alpha(&inst, DEFAULT_OVERLAP_THRESHOLD).unwrap();
        let scaled = a.alpha * 4.0;
        assert!(scaled > 0.5 && scaled < 10.0, "{a:?}");
        assert!(a.theta_alpha > 0.0);
    }

    #[test]
    fn alpha_needs_mark() {
        let inst = SearchInstance::setup_unmarked(4, PairingMode::FlipFlop).unwrap();
        assert!(extract_alpha(&inst, 0.1).is_err());
    }

    #[test]
    fn run_starts_uniform_and_rejects_empty_grid() {
        let inst = SearchInstance::setup(4, 0, PairingMode::FlipFlop).unwrap();
        let cfg = CtqwConfig::for_side(4, 5.0);
        let run = run_ctqw_search(&inst, &cfg).unwrap();
        assert!((run.curve[0].1 - 1.0 / 16.0).abs() < 1e-15);
        assert_eq!(run.curve[0].0, 0.0);
        let bad = CtqwConfig { dt: 0.0, ..cfg };
        assert!(run_ctqw_search(&inst, &bad).is_err());
        let bad = CtqwConfig { t_max: -1.0, ..cfg };
        assert!(run_ctqw_search(&inst, &bad).is_err());
    }

    #[test]
    fn dtqw_step_zero_is_uniform() {
        let inst = SearchInstance::setup(4, 0, PairingMode::FlipFlop).unwrap();
        let run = run_dtqw_search(&inst, 10).unwrap();
        assert!((run.curve[0] - 1.0 / 16.0).abs() < 1e-15);
        assert_eq!(run.curve.len(), 11);
    }

    #[test]
    fn scan_rejects_unsorted_and_reports_bad_rows() {
        let opts = ScanOptions {
            mode: Mode::Sequential,
            ..Default::default()
        };
        assert!(scaling_scan(&[8, 4], PairingMode::FlipFlop, &opts).is_err());
        let rows = scaling_scan(&[3, 4], PairingMode::FlipFlop, &opts).unwrap();
        assert!(rows[0].result.is_err());
        assert!(rows[1].result.is_ok());
    }
}
