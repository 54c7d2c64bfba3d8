use std::f64::consts::PI;
use std::str::FromStr;

use qwalk::exec::Mode;
use qwalk::graphs::{build_cycle, build_hypercube, build_torus, BasisLabel, ColoredGraph, PairingMode};
use qwalk::linalg::{eigh_dense, lemma2_check, Propagator, StateVector, DEFAULT_DENSE_CAP};
use qwalk::operators::{build_coin_flip, build_hamiltonian, build_shift, CoinSpec, HamiltonianForm, SparseOperator};
use qwalk::search::{
    extract_alpha, run_ctqw_search, run_dtqw_search, scaling_scan, CtqwConfig, ScanOptions, SearchInstance,
};
use qwalk::symmetry::{
    build_orbit_basis, check_symmetry, coo_entries, group_closure, quotient_graph, reduce_operator,
    reduction_equivalence_check, NamedGroup, GROUP_CAP,
};
use qwalk::walks::{classical_limit_demo, convergence_scan, dtqw_evolve, loglog_slope, vertex_distribution, FamilyStep};
use qwalk::EXACT_TOL;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::output::{emit, pretty, Cell, Format, Table, VERSION};
use crate::{
    ClassicalArgs, Common, EvolveArgs, Failure, LimitCheckArgs, QuotientArgs, SearchRunArgs, SearchScanArgs,
    SpectrumArgs, ValidateArgs, WalkArgs,
};

type Outcome = Result<(), Failure>;

fn config<T: serde::Serialize>(args: &T) -> Value {
    serde_json::to_value(args).unwrap_or(Value::Null)
}

fn mode(common: &Common) -> Mode {
    if common.sequential {
        Mode::Sequential
    } else {
        Mode::Parallel
    }
}

fn parse<T: FromStr<Err = qwalk::Error>>(s: &str) -> Result<T, Failure> {
    s.parse::<T>().map_err(Failure::from)
}

fn parse_usize(s: &str, what: &str) -> Result<usize, Failure> {
    s.trim()
        .parse()
        .map_err(|_| Failure::Usage(format!("{what}: expected a non-negative integer, got '{s}'")))
}

fn parse_graph(spec: &str) -> Result<ColoredGraph, Failure> {
    let parts: Vec<&str> = spec.splitn(2, ':').collect();
    let graph = match parts[..] {
        ["cycle", n] => build_cycle(parse_usize(n, "cycle length")?)?,
        ["hypercube", d] => build_hypercube(parse_usize(d, "hypercube dimension")?)?,
        ["torus", rest] => {
            let mut it = rest.splitn(2, ':');
            let side = parse_usize(it.next().unwrap_or(""), "torus side")?;
            let mode = match it.next() {
                Some(m) => parse::<PairingMode>(m)?,
                None => PairingMode::FlipFlop,
            };
            build_torus(side, mode)?
        }
        ["file", path] => {
            let text = std::fs::read_to_string(path)?;
            ColoredGraph::from_json(&text)?
        }
        _ => {
            return Err(Failure::Usage(format!(
                "unknown graph '{spec}' (expected cycle:N, torus:SIDE[:MODE], hypercube:DIM or file:PATH)"
            )))
        }
    };
    Ok(graph)
}

fn coin_spec(walk: &WalkArgs) -> Result<CoinSpec, Failure> {
    let coin = parse::<CoinSpec>(&walk.coin)?;
    Ok(match walk.marked {
        Some(v) => coin.with_marked(v),
        None => coin,
    })
}

struct Walk {
    graph: ColoredGraph,
    shift: SparseOperator,
    coin_flip: SparseOperator,
}

fn build_walk(walk: &WalkArgs) -> Result<Walk, Failure> {
    let coin = coin_spec(walk)?;
    let graph = parse_graph(&walk.graph)?;
    graph.ensure_valid()?;
    let shift = build_shift(&graph)?;
    let coin_flip = build_coin_flip(&graph, &coin)?;
    Ok(Walk {
        graph,
        shift,
        coin_flip,
    })
}

fn parse_init(spec: &str, graph: &ColoredGraph) -> Result<StateVector, Failure> {
    let (n, d) = (graph.num_vertices(), graph.degree());
    let bad = || Failure::Usage(format!("bad initial state '{spec}' (expected uniform, label:C,V or vertex:V)"));
    if spec == "uniform" {
        return Ok(StateVector::uniform(n * d));
    }
    let (kind, rest) = spec.split_once(':').ok_or_else(bad)?;
    match kind {
        "label" => {
            let (c, v) = rest.split_once(',').ok_or_else(bad)?;
            let (c, v) = (parse_usize(c, "coin")?, parse_usize(v, "vertex")?);
            if c >= d || v >= n {
                return Err(Failure::Usage(format!("label ({c},{v}) outside {d} coins x {n} vertices")));
            }
            Ok(StateVector::label(n, d, BasisLabel::new(c, v)))
        }
        "vertex" => {
            let v = parse_usize(rest, "vertex")?;
            if v >= n {
                return Err(Failure::Usage(format!("vertex {v} outside [0, {n})")));
            }
            Ok(StateVector::uniform_coin_at(n, d, v))
        }
        _ => Err(bad()),
    }
}

fn format_or(common: &Common, default: Format) -> Format {
    common.format.unwrap_or(default)
}

pub fn search_scan(a: &SearchScanArgs) -> Outcome {
    let pairing = parse::<PairingMode>(&a.pairing)?;
    if a.sides.is_empty() {
        return Err(Failure::Usage("no sides given".into()));
    }
    if let Some(&odd) = a.sides.iter().find(|&&s| s % 2 != 0) {
        return Err(qwalk::Error::OddSize {
            what: "torus side",
            value: odd,
        }
        .into());
    }
    let opts = ScanOptions {
        tol: a.tol,
        threshold: a.threshold,
        backend: parse(&a.backend)?,
        dt_factor: a.dt_factor,
        window: a.window,
        mode: mode(&a.common),
    };
    let rows = scaling_scan(&a.sides, pairing, &opts)?;
    let mut table = Table::new(
        "search-scan",
        config(a),
        json!({ "propagator_tol": a.tol, "overlap_threshold": a.threshold, "coin_symmetry_spread": 1e-10 }),
        vec![
            "side",
            "N",
            "status",
            "theta_alpha",
            "alpha",
            "t_peak",
            "p_peak",
            "t_over_sqrt_n",
            "p_times_log_n",
            "cost",
        ],
    );
    let mut failed = 0;
    for r in &rows {
        let mut row = vec![Cell::Int(r.side), Cell::Int(r.n)];
        match &r.result {
            Ok(v) => {
                row.push(Cell::Text("ok".into()));
                row.extend(
                    [v.theta_alpha, v.alpha, v.t_peak, v.p_peak, v.t_over_sqrt_n, v.p_times_log_n, v.cost]
                        .map(Cell::Num),
                );
            }
            Err(e) => {
                failed += 1;
                row.push(Cell::Text(format!("error: {e}")));
                row.extend([f64::NAN; 7].map(Cell::Num));
            }
        }
        table.rows.push(row);
    }
    emit(a.common.out.as_deref(), &table.render(format_or(&a.common, Format::Csv)))?;
    if failed > 0 {
        return Err(Failure::Numerical(format!("{failed} of {} rows failed", rows.len())));
    }
    Ok(())
}

pub fn search_run(a: &SearchRunArgs) -> Outcome {
    let pairing = parse::<PairingMode>(&a.pairing)?;
    let inst = SearchInstance::setup(a.side, a.marked, pairing)?;
    let alpha = extract_alpha(&inst, a.threshold)?;
    let tolerances = json!({ "propagator_tol": a.tol, "overlap_threshold": a.threshold, "coin_symmetry_spread": 1e-10 });
    if let Some(steps) = a.discrete_steps {
        let run = run_dtqw_search(&inst, steps)?;
        let mut table = Table::new("search-run", config(a), tolerances, vec!["step", "p_marked"]);
        table.meta("theta_alpha", alpha.theta_alpha);
        table.meta("step_peak", run.step_peak);
        table.meta("p_peak", run.p_peak);
        table.rows = run
            .curve
            .iter()
            .enumerate()
            .map(|(k, &p)| vec![Cell::Int(k), Cell::Num(p)])
            .collect();
        emit(a.common.out.as_deref(), &table.render(format_or(&a.common, Format::Csv)))?;
        return Ok(());
    }
    let cfg = CtqwConfig {
        t_max: a.t_max.unwrap_or(PI / alpha.theta_alpha),
        dt: a.dt.unwrap_or(0.01 * a.side as f64),
        tol: a.tol,
        backend: parse(&a.backend)?,
        mode: mode(&a.common),
    };
    let run = run_ctqw_search(&inst, &cfg)?;
    let mut table = Table::new("search-run", config(a), tolerances, vec!["t", "p_marked"]);
    table.meta("alpha", &alpha);
    table.meta("t_peak", run.t_peak);
    table.meta("p_peak", run.p_peak);
    table.meta("predicted_t_peak", PI / (2.0 * alpha.theta_alpha));
    table.meta("max_coin_asymmetry", run.max_coin_asymmetry);
    table.meta("max_energy_drift", run.max_energy_drift);
    table.meta("backend", run.backend);
    table.rows = run.curve.iter().map(|&(t, p)| vec![Cell::Num(t), Cell::Num(p)]).collect();
    emit(a.common.out.as_deref(), &table.render(format_or(&a.common, Format::Csv)))?;
    if !run.coin_symmetric() {
        return Err(Failure::Numerical(format!(
            "coin amplitudes at the marked vertex differ by {:.3e}",
            run.max_coin_asymmetry
        )));
    }
    Ok(())
}

pub fn evolve(a: &EvolveArgs) -> Outcome {
    let w = build_walk(&a.walk)?;
    let psi0 = parse_init(&a.init, &w.graph)?;
    let (psi, how) = if let Some(t) = a.t {
        let h = build_hamiltonian(&w.shift, &w.coin_flip, parse(&a.form)?)?;
        let p = Propagator::new(&h, a.tol, parse(&a.backend)?)?.with_mode(mode(&a.common));
        (p.apply(t, &psi0)?, format!("exp(-iHt), backend {:?}", p.backend()))
    } else if let Some(s) = a.s {
        let step = FamilyStep::new(s, &w.shift, &w.coin_flip)?;
        (step.evolve(&psi0, a.steps)?, "U(s)^steps".to_string())
    } else {
        (dtqw_evolve(&w.shift, &w.coin_flip, &psi0, a.steps)?, "(SF)^steps".to_string())
    };
    let mut table = Table::new(
        "evolve",
        config(a),
        json!({ "propagator_tol": a.tol, "exact": EXACT_TOL }),
        vec!["vertex", "probability"],
    );
    table.meta("evolution", how);
    table.meta("norm", psi.norm());
    table.rows = vertex_distribution(&psi, w.graph.num_vertices())
        .into_iter()
        .enumerate()
        .map(|(v, p)| vec![Cell::Int(v), Cell::Num(p)])
        .collect();
    emit(a.common.out.as_deref(), &table.render(format_or(&a.common, Format::Csv)))?;
    Ok(())
}

pub fn limit_check(a: &LimitCheckArgs) -> Outcome {
    let w = build_walk(&a.walk)?;
    let psi0 = parse_init(&a.init, &w.graph)?;
    let rows = convergence_scan(&w.shift, &w.coin_flip, &psi0, a.tau, &a.s, mode(&a.common))?;
    let mut table = Table::new(
        "limit-check",
        config(a),
        json!({ "propagator_tol": 1e-12 }),
        vec!["s", "n", "t", "error"],
    );
    if rows.len() >= 2 {
        let s: Vec<f64> = rows.iter().map(|r| r.s).collect();
        let e: Vec<f64> = rows.iter().map(|r| r.error).collect();
        if e.iter().all(|&x| x > 0.0) {
            table.meta("loglog_slope", loglog_slope(&s, &e));
        }
    }
    table.rows = rows
        .iter()
        .map(|r| vec![Cell::Num(r.s), Cell::Int(r.n), Cell::Num(r.t), Cell::Num(r.error)])
        .collect();
    emit(a.common.out.as_deref(), &table.render(format_or(&a.common, Format::Csv)))?;
    Ok(())
}

pub fn spectrum(a: &SpectrumArgs) -> Outcome {
    let w = build_walk(&a.walk)?;
    let form: HamiltonianForm = parse(&a.form)?;
    let h = build_hamiltonian(&w.shift, &w.coin_flip, form)?;
    let sd = eigh_dense(&h, DEFAULT_DENSE_CAP)?;
    let dim = w.graph.dim();
    let cu = sd.project(StateVector::uniform(dim).as_slice());
    let mut table = Table::new(
        "spectrum",
        config(a),
        json!({ "exact": EXACT_TOL, "squared_identity": 1e-8 }),
        vec!["index", "eigenvalue", "phi", "overlap_uniform"],
    );
    table.meta("max_eigen_residual", sd.max_residual(&h));
    let mut identity_failed = None;
    if a.squared_identity {
        let r = lemma2_check(&w.shift, &w.coin_flip, DEFAULT_DENSE_CAP)?;
        if !r.passed() {
            identity_failed = Some(r.max_residual);
        }
        table.meta("squared_identity", &r);
    }
    table.rows = (0..dim)
        .map(|j| {
            let phi = match form {
                HamiltonianForm::SMinusF => sd.phi(j).unwrap_or(f64::NAN),
                _ => f64::NAN,
            };
            vec![Cell::Int(j), Cell::Num(sd.eigenvalues[j]), Cell::Num(phi), Cell::Num(cu[j].norm())]
        })
        .collect();
    emit(a.common.out.as_deref(), &table.render(format_or(&a.common, Format::Csv)))?;
    if let Some(r) = identity_failed {
        return Err(Failure::Numerical(format!("eigenvector identity residual {r:.3e} above 1e-8")));
    }
    Ok(())
}

pub fn quotient(a: &QuotientArgs) -> Outcome {
    if a.common.format == Some(Format::Csv) {
        return Err(Failure::Usage("quotient output is JSON only".into()));
    }
    let w = build_walk(&a.walk)?;
    let group: NamedGroup = parse(&a.group)?;
    let form: HamiltonianForm = parse(&a.form)?;
    let gens = group
        .generators(&w.graph)
        .map_err(|e| Failure::Usage(format!("group '{}' unavailable: {e}", a.group)))?;
    let mut reports = Vec::new();
    for (i, g) in gens.iter().enumerate() {
        let r = check_symmetry(g, &w.shift, &w.coin_flip)?;
        if !r.passed() {
            return Err(Failure::Precondition(format!(
                "generator {i} does not commute with the walk: |[P,S]| = {:.3e}, |[P,F]| = {:.3e}, |[P,SF]| = {:.3e}",
                r.shift_residual, r.coin_residual, r.walk_residual
            )));
        }
        reports.push(r);
    }
    let (n, dim) = (w.graph.num_vertices(), w.graph.dim());
    let order = group_closure(&gens, dim, GROUP_CAP)?.len();
    let basis = build_orbit_basis(&gens, dim, n)?;
    let psi0 = parse_init(&a.init, &w.graph)?;
    let h = build_hamiltonian(&w.shift, &w.coin_flip, form)?;
    let h_red = reduce_operator(&h, &basis)?;
    let s_red = reduce_operator(&w.shift, &basis)?;
    let f_red = reduce_operator(&w.coin_flip, &basis)?;
    let q = quotient_graph(&basis, &h_red)?;
    let eq = reduction_equivalence_check(&w.shift, &w.coin_flip, &basis, &psi0, &a.t, &a.s, form, mode(&a.common))?;
    let orbits: Vec<Vec<BasisLabel>> = basis
        .orbits
        .iter()
        .map(|o| o.iter().map(|&k| BasisLabel::from_flat(k, n)).collect())
        .collect();
    let doc = json!({
        "version": VERSION,
        "command": "quotient",
        "config": config(a),
        "tolerances": { "symmetry": EXACT_TOL, "span": qwalk::symmetry::SPAN_TOL, "equivalence": eq.tolerance },
        "full_dim": dim,
        "reduced_dim": basis.len(),
        "group_order": order,
        "symmetry": reports,
        "orbits": orbits,
        "vertex_grouping": basis.vertex_grouping,
        "reduced": {
            "shift": coo_entries(&s_red),
            "coin_flip": coo_entries(&f_red),
            "hamiltonian": coo_entries(&h_red),
        },
        "quotient": {
            "nodes": q.num_nodes(),
            "vertices": basis.num_quotient_vertices(),
            "grouping": q.grouping,
            "edges": q.edges,
        },
        "equivalence": eq,
    });
    emit(a.common.out.as_deref(), &pretty(&doc))?;
    if !eq.passed() {
        return Err(Failure::Numerical(format!(
            "full and reduced dynamics differ by {:.3e}",
            eq.max_deviation
        )));
    }
    Ok(())
}

#[derive(Deserialize)]
struct ChainFile {
    matrix: Vec<Vec<f64>>,
    p0: Vec<f64>,
}

pub fn classical_demo(a: &ClassicalArgs) -> Outcome {
    let chain = match &a.chain {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str::<ChainFile>(&text)
                .map_err(|e| Failure::Usage(format!("bad chain file {}: {e}", path.display())))?
        }
        None => ChainFile {
            matrix: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            p0: vec![1.0, 0.0],
        },
    };
    let rows = classical_limit_demo(&chain.matrix, &chain.p0, a.tau, &a.eps)?;
    let mut table = Table::new(
        "classical-demo",
        config(a),
        json!({ "stochastic": 1e-12 }),
        vec!["eps", "steps", "tv_error"],
    );
    let ratios: Vec<f64> = rows.windows(2).map(|w| w[0].tv_error / w[1].tv_error).collect();
    table.meta("error_ratios", ratios);
    table.rows = rows
        .iter()
        .map(|r| vec![Cell::Num(r.eps), Cell::Int(r.steps), Cell::Num(r.tv_error)])
        .collect();
    emit(a.common.out.as_deref(), &table.render(format_or(&a.common, Format::Csv)))?;
    Ok(())
}

pub fn validate(a: &ValidateArgs) -> Outcome {
    let graph = parse_graph(&a.graph)?;
    let report = graph.validate();
    let coin = match &a.coin {
        Some(c) => {
            let spec = parse::<CoinSpec>(c)?;
            let spec = match a.marked {
                Some(v) => spec.with_marked(v),
                None => spec,
            };
            Some(match spec.validate(graph.degree()) {
                Ok(()) => json!({ "coin": c, "valid": true }),
                Err(e) => json!({ "coin": c, "valid": false, "error": e.to_string() }),
            })
        }
        None => None,
    };
    let coin_ok = coin.as_ref().is_none_or(|c| c["valid"] == json!(true));
    let text = match format_or(&a.common, Format::Json) {
        Format::Json => pretty(&json!({
            "version": VERSION,
            "command": "validate",
            "config": config(a),
            "graph": graph.name(),
            "N": graph.num_vertices(),
            "d": graph.degree(),
            "mode": graph.mode(),
            "valid": report.is_valid(),
            "violations": report.violations,
            "coin": coin,
        })),
        Format::Csv => {
            let mut table = Table::new("validate", config(a), json!({ "exact": EXACT_TOL }), vec!["kind", "label", "detail"]);
            table.meta("valid", report.is_valid());
            table.meta("coin", &coin);
            table.rows = report
                .violations
                .iter()
                .map(|v| {
                    vec![
                        Cell::Text(serde_json::to_value(v.kind).map(|k| k.as_str().unwrap_or("").to_string()).unwrap_or_default()),
                        Cell::Text(v.label.map(|l| l.to_string()).unwrap_or_default()),
                        Cell::Text(v.detail.clone()),
                    ]
                })
                .collect();
            table.render(Format::Csv)
        }
    };
    emit(a.common.out.as_deref(), &text)?;
    if !report.is_valid() || !coin_ok {
        return Err(Failure::Precondition(format!(
            "{} violation(s){}",
            report.violations.len(),
            if coin_ok { "" } else { ", coin invalid" }
        )));
    }
    Ok(())
}
