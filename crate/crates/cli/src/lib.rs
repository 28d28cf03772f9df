//! Command-line front end: family construction, state verification, bound reports,
//! optimizer sandwiches and parameter sweeps.

pub mod commands;
pub mod error;
pub mod report;
pub mod statefile;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ppt_pbit::families::DEFAULT_DIM_CAP;
use ppt_pbit::tol;

pub use error::{CliError, CliResult};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "ppt-pbit", version, about = "Distance of PPT states to private bits")]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// PPT tolerance, scaled by the matrix dimension.
    #[arg(long, global = true, default_value_t = tol::PSD_TOL)]
    pub tol: f64,

    /// Largest total Hilbert-space dimension a command may build.
    #[arg(long = "dim-cap", global = true, default_value_t = DEFAULT_DIM_CAP)]
    pub dim_cap: usize,

    /// Suppress human-readable output on stderr.
    #[arg(long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a family state and write it as a state file.
    Construct(ConstructArgs),
    /// Check the density-operator invariants of a state file.
    Verify(InputArgs),
    /// Report the analytic lower bounds for a state.
    Bound(BoundArgs),
    /// Pair the analytic lower bound with an optimized upper bound.
    Optimize(OptimizeArgs),
    /// Bound reports across a range of family parameters.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Hhho,
    CckklA,
    CckklAPower,
    CckklB,
    HphhFourier,
    HphhUnitaryFile,
    PbitRandom,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Hhho => "hhho",
            Family::CckklA => "cckkl-a",
            Family::CckklAPower => "cckkl-a-power",
            Family::CckklB => "cckkl-b",
            Family::HphhFourier => "hphh-fourier",
            Family::HphhUnitaryFile => "hphh-unitary-file",
            Family::PbitRandom => "pbit-random",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ConstructArgs {
    pub family: Family,
    /// Shield dimension (hhho, hphh-fourier, pbit-random).
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    /// Tensor power (cckkl-a-power).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    /// JSON file holding `{"matrix": [[[re, im], ...], ...]}` (hphh-unitary-file).
    #[arg(long)]
    pub unitary: Option<PathBuf>,
    /// Output path; the state file goes to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BoundArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Print the JSON report on stdout (the default unless --csv is given).
    #[arg(long)]
    pub json: bool,
    /// Append a report row to this CSV file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
    #[arg(long, default_value_t = 2000)]
    pub iters: usize,
    /// Append a report row to this CSV file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepFamily {
    HphhFourier,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub family: SweepFamily,
    /// Inclusive range `lo..hi`.
    #[arg(long = "d-range")]
    pub d_range: String,
    /// Write the table to this CSV file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Print the JSON rows on stdout (the default unless --csv is given).
    #[arg(long)]
    pub json: bool,
}

/// Captured result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

pub fn run(cli: &Cli) -> Outcome {
    let mut log = commands::Log::new(cli.quiet);
    let result = match &cli.command {
        Command::Construct(a) => commands::construct(cli, a, &mut log),
        Command::Verify(a) => commands::verify(cli, a, &mut log),
        Command::Bound(a) => commands::bound(cli, a, &mut log),
        Command::Optimize(a) => commands::optimize(cli, a, &mut log),
        Command::Sweep(a) => commands::sweep(cli, a, &mut log),
    };
    match result {
        Ok((stdout, code)) => Outcome {
            stdout,
            stderr: log.into_string(),
            code,
        },
        Err(e) => {
            log.error(&e.to_string());
            Outcome {
                stdout: String::new(),
                stderr: log.into_string(),
                code: e.exit_code(),
            }
        }
    }
}
