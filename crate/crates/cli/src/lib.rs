//! Command-line harness: configuration resolution, the parallel replicate
//! runner, report writers, and the experiment subcommands.

// Validation guards use negated comparisons so NaN lands on the rejecting
// side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod report;
pub mod runner;
pub mod settings;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Exit codes: 0 success, 2 configuration error, 3 I/O error,
/// 4 schedule/parameter-regime error.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Schedule(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Schedule(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Io(m) | CliError::Schedule(m) => m,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "twolocus",
    about = "Two-locus Moran model: exact simulation and fixation-time analytics",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run independent replicates and write per-replicate and aggregate results
    Simulate(CommonArgs),
    /// Monte Carlo sweep over a list/range of recombination probabilities
    Sweep(CommonArgs),
    /// Closed-form t*(r) curve, no simulation
    TstarCurve(CommonArgs),
    /// Print the derived constant chain, phase schedule and prediction windows
    Phases(CommonArgs),
    /// Sample replicates at the phase times and report window pass fractions
    PhaseCheck(CommonArgs),
    /// Compare simulated paths against the integrated fluid limit
    OdeCompare(CommonArgs),
    /// Report the finite-size values of the asymptotic parameter ratios
    Validate(CommonArgs),
    /// Print the constant chain with every defining (in)equality checked
    Constants(CommonArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Population size N
    #[arg(long)]
    pub n: Option<u64>,
    /// Per-allele mutation rate mu
    #[arg(long)]
    pub mu: Option<f64>,
    /// Selection coefficient s
    #[arg(long)]
    pub s: Option<f64>,
    /// Recombination probability r
    #[arg(long)]
    pub r: Option<f64>,
    /// Master seed; replicate k derives its stream from (seed, k)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of independent replicates
    #[arg(long)]
    pub replicates: Option<u64>,
    /// Worker threads (default: TWOLOCUS_THREADS or the machine's parallelism)
    #[arg(long)]
    pub threads: Option<usize>,
    /// Flat key=value config file; explicit flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (files) or path, depending on the subcommand
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Trajectory sampling interval
    #[arg(long = "sample-dt")]
    pub sample_dt: Option<f64>,
    /// Stop a replicate at this model time
    #[arg(long = "max-time")]
    pub max_time: Option<f64>,
    /// Stop a replicate after this many events
    #[arg(long = "max-events")]
    pub max_events: Option<u64>,
    /// Tag every newborn with its founder lineage
    #[arg(long = "track-lineage")]
    pub track_lineage: bool,
    /// Initial counts x0,x1,x2,x3 (default: all type 0)
    #[arg(long)]
    pub init: Option<String>,
    /// Parameter preset: theorem-check | figure-1
    #[arg(long)]
    pub preset: Option<String>,
    /// Chain parameter epsilon (default 1/32)
    #[arg(long)]
    pub eps: Option<f64>,
    /// Chain parameter delta (default 1/8)
    #[arg(long)]
    pub delta: Option<f64>,
    /// Multiplicative widening applied to prediction windows (default 2)
    #[arg(long)]
    pub slack: Option<f64>,
    /// Deviation threshold for ode-compare (default delta^4/4)
    #[arg(long)]
    pub eps0: Option<f64>,
    /// Comma-separated r values for sweep/tstar-curve
    #[arg(long = "r-list")]
    pub r_list: Option<String>,
    /// r range lo:hi:count (inclusive, linear) for sweep/tstar-curve
    #[arg(long = "r-range")]
    pub r_range: Option<String>,
}

pub fn run_main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::TstarCurve(a) => commands::tstar_curve(&a),
        Command::Phases(a) => commands::phases(&a),
        Command::PhaseCheck(a) => commands::phase_check(&a),
        Command::OdeCompare(a) => commands::ode_compare(&a),
        Command::Validate(a) => commands::validate(&a),
        Command::Constants(a) => commands::constants(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
