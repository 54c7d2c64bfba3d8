//! `qwalk`: reproducible runs of the walk, limit, search and quotient experiments.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 partial numerical
//! failure, 3 failed precondition (symmetry or graph validation).
//! Thread count follows `RAYON_NUM_THREADS`.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use output::Format;

#[derive(Debug, Parser)]
#[command(name = "qwalk", version, about = "Coined quantum walks, their continuous limit, torus search and quotient reductions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Search scaling over several torus sides.
    SearchScan(SearchScanArgs),
    /// One search run: p_x(t) on the sampling grid.
    SearchRun(SearchRunArgs),
    /// Evolve a state by walk steps, U(s) steps or exp(-iHt).
    Evolve(EvolveArgs),
    /// Distance between U(s)^n and the continuous limit for several s.
    LimitCheck(LimitCheckArgs),
    /// Eigenvalues of a Hamiltonian, optionally with the SF eigenvector identity check.
    Spectrum(SpectrumArgs),
    /// Orbit basis, reduced operators and quotient graph under a symmetry group.
    Quotient(QuotientArgs),
    /// Lazy Markov chain against its continuous-time limit.
    ClassicalDemo(ClassicalArgs),
    /// Check a graph's pairing (and optionally a coin).
    Validate(ValidateArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct Common {
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Run scans on one thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct SearchScanArgs {
    #[arg(long, value_delimiter = ',', default_value = "8,16,32")]
    pub sides: Vec<usize>,
    #[arg(long, default_value = "flip_flop")]
    pub pairing: String,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Minimum overlap of an eigenspace with the start state.
    #[arg(long, default_value_t = 0.1)]
    pub threshold: f64,
    #[arg(long, default_value = "polynomial")]
    pub backend: String,
    /// Sampling step in units of sqrt N.
    #[arg(long, default_value_t = 0.01)]
    pub dt_factor: f64,
    /// Window in units of the predicted peak time.
    #[arg(long, default_value_t = 2.0)]
    pub window: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct SearchRunArgs {
    #[arg(long)]
    pub side: usize,
    #[arg(long, default_value = "flip_flop")]
    pub pairing: String,
    #[arg(long, default_value_t = 0)]
    pub marked: usize,
    /// End of the window; defaults to twice the predicted peak time.
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Sampling step; defaults to 0.01 sqrt N.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 0.1)]
    pub threshold: f64,
    #[arg(long, default_value = "polynomial")]
    pub backend: String,
    /// Run the discrete walk SF instead, for this many steps.
    #[arg(long)]
    pub discrete_steps: Option<usize>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct WalkArgs {
    /// cycle:N, torus:SIDE[:flip_flop|edge_colored], hypercube:DIM or file:PATH
    #[arg(long)]
    pub graph: String,
    #[arg(long, default_value = "grover")]
    pub coin: String,
    /// Vertex carrying the -I coin.
    #[arg(long)]
    pub marked: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub walk: WalkArgs,
    /// uniform, label:C,V or vertex:V
    #[arg(long, default_value = "label:0,0")]
    pub init: String,
    #[arg(long, default_value_t = 1)]
    pub steps: usize,
    /// Apply U(s) instead of SF.
    #[arg(long, conflicts_with = "t")]
    pub s: Option<f64>,
    /// Apply exp(-iHt) instead of walk steps.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, default_value = "s_plus_f_minus_2i")]
    pub form: String,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value = "auto")]
    pub backend: String,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct LimitCheckArgs {
    #[command(flatten)]
    pub walk: WalkArgs,
    #[arg(long, default_value_t = 2.0)]
    pub tau: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.025")]
    pub s: Vec<f64>,
    #[arg(long, default_value = "label:0,0")]
    pub init: String,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub walk: WalkArgs,
    #[arg(long, default_value = "s_minus_f")]
    pub form: String,
    /// Also check (S-F)^2 |j> = 4 sin^2(phi_j/2) |j> on every SF eigenpair.
    #[arg(long)]
    pub squared_identity: bool,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct QuotientArgs {
    #[command(flatten)]
    pub walk: WalkArgs,
    /// trivial, bit-perms, reflection or rotation
    #[arg(long, default_value = "trivial")]
    pub group: String,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
    pub t: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.25,1")]
    pub s: Vec<f64>,
    #[arg(long, default_value = "s_plus_f_minus_2i")]
    pub form: String,
    #[arg(long, default_value = "uniform")]
    pub init: String,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct ClassicalArgs {
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.025")]
    pub eps: Vec<f64>,
    /// JSON file {"matrix": [[..]], "p0": [..]} with a column-stochastic matrix;
    /// defaults to the two-state flip chain started in state 0.
    #[arg(long)]
    pub chain: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    #[arg(long)]
    pub graph: String,
    /// Also validate this coin on the graph's degree.
    #[arg(long)]
    pub coin: Option<String>,
    #[arg(long)]
    pub marked: Option<usize>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: Common,
}

/// Failure with its exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(String),
    Precondition(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Precondition(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Numerical(m) | Failure::Precondition(m) => m,
        }
    }
}

impl From<qwalk::Error> for Failure {
    fn from(e: qwalk::Error) -> Self {
        use qwalk::Error as E;
        let msg = e.to_string();
        match e {
            E::OddSize { .. }
            | E::InvalidParameter(_)
            | E::UnsupportedCoin(_)
            | E::CoinDimension { .. }
            | E::DimensionMismatch { .. }
            | E::DenseCapExceeded { .. }
            | E::NotStochastic(_) => Failure::Usage(msg),
            E::InvalidGraph(_)
            | E::CoinNotHermitianUnitary { .. }
            | E::NotHermitian { .. }
            | E::NotInvolution { .. }
            | E::OutsideSpan { .. }
            | E::SpanLeak { .. }
            | E::NotBijective { .. } => Failure::Precondition(msg),
            E::Eigen(_) | E::NoQualifyingEigenvalue { .. } => Failure::Numerical(msg),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(format!("i/o error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::SearchScan(a) => commands::search_scan(a),
        Command::SearchRun(a) => commands::search_run(a),
        Command::Evolve(a) => commands::evolve(a),
        Command::LimitCheck(a) => commands::limit_check(a),
        Command::Spectrum(a) => commands::spectrum(a),
        Command::Quotient(a) => commands::quotient(a),
        Command::ClassicalDemo(a) => commands::classical_demo(a),
        Command::Validate(a) => commands::validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("qwalk: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
