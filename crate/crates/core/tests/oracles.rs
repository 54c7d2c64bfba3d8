mod common;

use std::collections::BTreeSet;
use std::f64::consts::PI;

use common::*;
use nalgebra::DMatrix;
use qwalk::exec::Mode;
use qwalk::graphs::{build_cycle, build_hypercube, build_torus, PairingMode};
use qwalk::linalg::{bessel_j_sequence, eigh_dense, expm_apply, Backend, Propagator, StateVector, DEFAULT_DENSE_CAP};
use qwalk::operators::{build_coin_flip, build_hamiltonian, build_shift, CoinSpec, HamiltonianForm};
use qwalk::search::{
    analyze, phase_relation_check, extract_alpha, recommended_dtqw_steps, run_dtqw_search, ScanOptions, SearchInstance,
    DEFAULT_OVERLAP_THRESHOLD,
};
use qwalk::symmetry::{build_orbit_basis, group_closure, reduction_equivalence_check, NamedGroup, GROUP_CAP};
use qwalk::walks::{convergence_scan, dtqw_evolve, first_order_step, sign_flip_invariance, vertex_distribution, FamilyStep};
use qwalk::C64;

fn sorted_real_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[test]
fn bessel_matches_quadrature() {
    for x in [0.3, 2.0, 7.5, 25.0] {
        let j = bessel_j_sequence(x, 12);
        for (k, &jk) in j.iter().enumerate() {
            assert!((jk - bessel_quadrature(k, x)).abs() < 1e-12, "J_{k}({x})");
        }
    }
}

#[test]
fn s_minus_f_spectrum_matches_nalgebra() {
    let inst = SearchInstance::setup(4, 0, PairingMode::FlipFlop).unwrap();
    let ours = eigh_dense(&inst.hamiltonian, DEFAULT_DENSE_CAP).unwrap();
    let oracle = sorted_real_eigenvalues(&to_nalgebra(&inst.hamiltonian));
    for (a, b) in ours.eigenvalues.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-12);
    }
    // row sums bound the spectrum by 4, the true radius is at most 2
    assert!(oracle.iter().all(|l| l.abs() <= 2.0 + 1e-12));
    let a = extract_alpha(&inst, DEFAULT_OVERLAP_THRESHOLD).unwrap();
    assert!(oracle.iter().any(|l| (l - a.theta_alpha).abs() < 1e-10));
}

#[test]
fn s_minus_f_spectrum_symmetry_where_oracle_confirms() {
    for side in [2, 4, 6] {
        for mode in [PairingMode::FlipFlop, PairingMode::EdgeColored] {
            let inst = SearchInstance::setup(side, 0, mode).unwrap();
            let oracle = sorted_real_eigenvalues(&to_nalgebra(&inst.hamiltonian));
            let mirrored = oracle.iter().rev().zip(&oracle).all(|(a, b)| (a + b).abs() < 1e-9);
            if mirrored {
                let ours = eigh_dense(&inst.hamiltonian, DEFAULT_DENSE_CAP).unwrap().eigenvalues;
                assert!(ours.iter().rev().zip(&ours).all(|(a, b)| (a + b).abs() < 1e-9));
            }
        }
    }
}

#[test]
fn expm_torus4_marked_matches_taylor() {
    let inst = SearchInstance::setup(4, 0, PairingMode::FlipFlop).unwrap();
    let psi = inst.initial_state();
    let oracle = taylor_expm_apply(&inst.hamiltonian, 1.0, &psi);
    for backend in [Backend::Spectral, Backend::Polynomial] {
        let out = Propagator::new(&inst.hamiltonian, 1e-10, backend).unwrap().apply(1.0, &psi).unwrap();
        assert!(out.distance(&oracle) <= 1e-9, "{backend:?}");
    }
}

#[test]
fn shifted_form_differs_by_global_phase() {
    let g = build_torus(4, PairingMode::FlipFlop).unwrap();
    let s = build_shift(&g).unwrap();
    let f = build_coin_flip(&g, &CoinSpec::grover().with_marked(2)).unwrap();
    let h1 = build_hamiltonian(&s, &f, HamiltonianForm::SPlusFMinus2I).unwrap();
    let h2 = build_hamiltonian(&s, &f, HamiltonianForm::SPlusF).unwrap();
    let psi = StateVector::basis(64, 5);
    let a = expm_apply(&h1, 1.3, &psi, 1e-12).unwrap();
    let b = expm_apply(&h2, 1.3, &psi, 1e-12).unwrap();
    let phase = C64::from_polar(1.0, 2.0 * 1.3);
    assert!(a.distance(&b.scaled(phase)) < 1e-11);
}

#[test]
fn ten_steps_match_dense_power() {
    let g = build_cycle(8).unwrap();
    let s = build_shift(&g).unwrap();
    let f = build_coin_flip(&g, &CoinSpec::hadamard()).unwrap();
    let psi0 = StateVector::basis(16, 0);
    let out = dtqw_evolve(&s, &f, &psi0, 10).unwrap();
    let u = dense_walk(&g, &|_| hadamard());
    let mut oracle = to_vector(&psi0);
    for _ in 0..10 {
        oracle = &u * oracle;
    }
    for (a, b) in out.as_slice().iter().zip(oracle.iter()) {
        assert!((a - b).norm() <= 1e-12);
    }
    let probs = vertex_distribution(&out, 8);
    for v in 0..8 {
        let p: f64 = (0..2).map(|c| oracle[c * 8 + v].norm_sqr()).sum();
        assert!((probs[v] - p).abs() <= 1e-12);
    }
}

#[test]
fn family_step_first_order() {
    let g = build_torus(4, PairingMode::FlipFlop).unwrap();
    let s = build_shift(&g).unwrap();
    let f = build_coin_flip(&g, &CoinSpec::grover()).unwrap();
    let psi = StateVector::basis(64, 7);
    let gap = |sv: f64| {
        let full = FamilyStep::new(sv, &s, &f).unwrap().apply(&psi).unwrap();
        full.distance(&first_order_step(&s, &f, &psi, sv).unwrap())
    };
    let ratio = gap(0.02) / gap(0.01);
    assert!((ratio - 4.0).abs() < 0.2, "{ratio}");
}

#[test]
fn family_endpoint_far_from_limit() {
    let g = build_cycle(8).unwrap();
    let s = build_shift(&g).unwrap();
    let f = build_coin_flip(&g, &CoinSpec::hadamard()).unwrap();
    let rows = convergence_scan(&s, &f, &StateVector::basis(16, 0), 1.0, &[1.0], Mode::Sequential).unwrap();
    assert!(rows[0].error > 0.1, "{:?}", rows[0]);
}

#[test]
fn convergence_vanishes_when_coin_is_shift() {
    let g = build_cycle(8).unwrap();
    let s = build_shift(&g).unwrap();
    let rows = convergence_scan(&s, &s, &StateVector::basis(16, 3), 2.0, &[0.1, 0.05], Mode::Sequential).unwrap();
    assert!(rows.iter().all(|r| r.error <= 1e-12));
}

#[test]
fn sign_flip_odd_steps() {
    let inst = SearchInstance::setup(4, 0, PairingMode::FlipFlop).unwrap();
    let r = sign_flip_invariance(&inst.shift, &inst.coin_flip, &inst.initial_state(), 7).unwrap();
    assert!(r.max_probability_diff <= 1e-14 && r.max_phase_deviation <= 1e-14);
}

#[test]
fn phase_relation_holds() {
    for mode in [PairingMode::FlipFlop, PairingMode::EdgeColored] {
        let inst = SearchInstance::setup(4, 0, mode).unwrap();
        let r = phase_relation_check(&inst).unwrap();
        assert!(r.max_residual <= 1e-8, "{r:?}");
        assert!(r.checked > 0);
    }
}

#[test]
fn alpha_scaling_and_overlaps() {
    let a8 = extract_alpha(&SearchInstance::setup(8, 0, PairingMode::FlipFlop).unwrap(), 0.1).unwrap();
    let a16 = extract_alpha(&SearchInstance::setup(16, 0, PairingMode::FlipFlop).unwrap(), 0.1).unwrap();
    let ratio = a8.alpha / a16.alpha;
    assert!(ratio > 1.4 && ratio < 2.8, "{ratio}");
    let half = 0.5f64.sqrt();
    assert!((a16.overlap_uniform_plus - half).abs() < (a8.overlap_uniform_plus - half).abs() + 0.05);
    assert!((a16.overlap_uniform_plus - half).abs() < 0.1, "{a16:?}");
}

#[test]
fn side16_peak_time_and_height() {
    let opts = ScanOptions {
        mode: Mode::Sequential,
        ..Default::default()
    };
    let a = analyze(16, PairingMode::FlipFlop, &opts).unwrap();
    let predicted = PI / (2.0 * a.alpha.theta_alpha);
    assert!((a.run.t_peak - predicted).abs() <= 0.25 * predicted, "{} vs {predicted}", a.run.t_peak);
    assert!(a.run.p_peak >= 50.0 / 256.0, "{}", a.run.p_peak);
    assert!(a.run.max_energy_drift < 1e-8);

    let inst = SearchInstance::setup(16, 0, PairingMode::FlipFlop).unwrap();
    let steps = 2 * recommended_dtqw_steps(256);
    let d = run_dtqw_search(&inst, steps).unwrap();
    assert!(d.step_peak < steps);
    let ratio = d.p_peak / a.run.p_peak;
    assert!(ratio > 1.0 / 3.0 && ratio < 3.0, "{ratio}");
}

#[test]
fn torus_rotation_orbits_match_enumeration() {
    let side = 4;
    let n = side * side;
    let g = build_torus(side, PairingMode::FlipFlop).unwrap();
    let gens = NamedGroup::Rotation.generators(&g).unwrap();
    let basis = build_orbit_basis(&gens, 4 * n, n).unwrap();
    // rotate (x, y) -> (-y, x); directions +x, -x, +y, -y go to +y, -y, -x, +x
    let dir = [2usize, 3, 1, 0];
    let rot = |k: usize| {
        let (c, v) = (k / n, k % n);
        let (x, y) = (v % side, v / side);
        dir[c] * n + (side - y) % side + side * x
    };
    let mut classes: BTreeSet<BTreeSet<usize>> = BTreeSet::new();
    for k in 0..4 * n {
        let mut orbit = BTreeSet::new();
        let mut cur = k;
        for _ in 0..4 {
            orbit.insert(cur);
            cur = rot(cur);
        }
        classes.insert(orbit);
    }
    assert_eq!(basis.len(), classes.len());
    let ours: BTreeSet<BTreeSet<usize>> = basis.orbits.iter().map(|o| o.iter().copied().collect()).collect();
    assert_eq!(ours, classes);
}

#[test]
fn hypercube_orbits_match_enumeration() {
    let g = build_hypercube(3).unwrap();
    let gens = NamedGroup::BitPerms.generators(&g).unwrap();
    let basis = build_orbit_basis(&gens, 24, 8).unwrap();
    let mut classes: BTreeSet<(u32, bool)> = BTreeSet::new();
    for k in 0..24 {
        let (c, v): (usize, usize) = (k / 8, k % 8);
        classes.insert((v.count_ones(), (v >> c) & 1 == 1));
    }
    let expected: BTreeSet<(u32, bool)> =
        [(0, false), (1, false), (1, true), (2, false), (2, true), (3, true)].into_iter().collect();
    assert_eq!(classes, expected);
    assert_eq!(basis.len(), classes.len());
    for o in &basis.orbits {
        let keys: BTreeSet<(u32, bool)> =
            o.iter().map(|&k| ((k % 8).count_ones(), ((k % 8) >> (k / 8)) & 1 == 1)).collect();
        assert_eq!(keys.len(), 1);
    }
    assert_eq!(group_closure(&gens, 24, GROUP_CAP).unwrap().len(), 6);
}

#[test]
fn pure_walk_step_reduces_exactly() {
    let g = build_hypercube(3).unwrap();
    let s = build_shift(&g).unwrap();
    let f = build_coin_flip(&g, &CoinSpec::grover()).unwrap();
    let gens = NamedGroup::BitPerms.generators(&g).unwrap();
    let basis = build_orbit_basis(&gens, 24, 8).unwrap();
    let r = reduction_equivalence_check(
        &s,
        &f,
        &basis,
        &StateVector::uniform(24),
        &[],
        &[1.0],
        HamiltonianForm::SPlusFMinus2I,
        Mode::Sequential,
    )
    .unwrap();
    assert!(r.max_deviation <= 1e-12, "{r:?}");
}
