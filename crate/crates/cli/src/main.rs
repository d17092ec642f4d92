//! `holocalc` command-line front end. Every command prints one JSON report
//! (or writes it to `--out`).

mod commands;
mod report;
mod suites;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use holocalc::Error;

#[derive(Debug, Parser)]
#[command(name = "holocalc", version, about = "Holomorphic functional calculus on finitely calibrated spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Opts {
    /// Operator JSON file.
    #[arg(long = "T", global = true)]
    pub t: Option<PathBuf>,
    /// Second operator (perturbation, or `B` for joint renorming).
    #[arg(long = "S", global = true)]
    pub s: Option<PathBuf>,
    /// Calibration JSON file; the max norm is used when omitted.
    #[arg(long, global = true)]
    pub calib: Option<PathBuf>,
    /// Function in the expression syntax, e.g. `exp`, `poly:1,0,2`, `rat:1/-5,1`.
    #[arg(long, global = true)]
    pub f: Option<String>,
    /// Domain JSON file.
    #[arg(long, global = true)]
    pub domain: Option<PathBuf>,
    /// Cluster indices, comma separated.
    #[arg(long, global = true)]
    pub set: Option<String>,
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    /// Second scale for joint renorming.
    #[arg(long = "mu-b", global = true)]
    pub mu_b: Option<f64>,
    #[arg(long, global = true, default_value_t = 60)]
    pub nmax: usize,
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = 0.1)]
    pub gap: f64,
    /// Quadrature nodes per circle (grid points per axis for `resolvent`).
    #[arg(long, global = true, default_value_t = 128)]
    pub nodes: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RenormMode {
    /// Witness construction for locally bounded `T`.
    Bounded,
    /// Power-sup construction at scale `--mu`.
    Spectral,
    /// Joint power-sup for commuting `--T` and `--S`.
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Calculus,
    Projections,
    Radius,
    Neumann,
    Perturbation,
    Renorm,
    Resolvent,
    Coincidence,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Radius of boundedness by each formula.
    Radius,
    /// Eigenvalues, residuals and clusters at `--gap`.
    Spectrum,
    /// Resolvent-norm landscape; the grid goes to `--csv`.
    Resolvent {
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Half-width of the square grid; defaults to `1.5·(ρ + 1)`.
        #[arg(long)]
        extent: Option<f64>,
    },
    /// `f(T)` by contour quadrature.
    Funcalc,
    /// Riesz projection for the clusters in `--set`.
    Project,
    /// `f(T + S)` as a Taylor series in `S`.
    Perturb,
    /// Q-equivalent calibration in which `T` is bounded.
    Renorm {
        #[arg(long, value_enum, default_value_t = RenormMode::Spectral)]
        mode: RenormMode,
        /// Witness member for `bounded` mode.
        #[arg(long)]
        p0: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Point and approximate point spectrum with witnesses.
    Classify,
    /// Resolvent-set witnesses via renorming at the points of `--lambdas`.
    Intersect {
        #[arg(long)]
        lambdas: PathBuf,
    },
    /// Seeded invariant suite.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 10)]
        cases: usize,
    },
}

/// Errors from reading or parsing inputs, or from the computation.
#[derive(Debug)]
pub enum CliError {
    Io(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) | CliError::Core(Error::Parse(_)) => 1,
            CliError::Core(Error::NonConvergence(_)) => 3,
            CliError::Core(_) => 2,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Io(_) => "io",
            CliError::Core(e) => match e {
                Error::DimensionMismatch { .. } => "dimension_mismatch",
                Error::InvalidInput(_) => "invalid_input",
                Error::NotSeparating(_) => "not_separating",
                Error::NotQuotientBounded { .. } => "not_quotient_bounded",
                Error::Singular(_) => "singular",
                Error::Precondition(_) => "precondition",
                Error::NonCommuting { .. } => "non_commuting",
                Error::InfeasibleContour(_) => "infeasible_contour",
                Error::NotAnalytic(_) => "not_analytic",
                Error::NonConvergence(_) => "non_convergence",
                Error::Parse(_) => "parse",
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Io(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        }
    }
}

fn configure_threads() {
    let Ok(v) = std::env::var("HOLOCALC_THREADS") else { return };
    if let Ok(n) = v.trim().parse::<usize>() {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let result = commands::run(&cli).and_then(|value| report::emit(&value, cli.opts.out.as_deref()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = serde_json::json!({ "error": e.kind(), "message": e.message(), "exit_code": e.exit_code() });
            eprintln!("{}", serde_json::to_string_pretty(&body).expect("plain data serializes"));
            ExitCode::from(e.exit_code())
        }
    }
}
