//! `epps`: simulate price models, reproduce Epps-curve experiments and analyse trade files.

mod epps_cmd;
mod exit;
mod manifest;
mod simulate;
mod taq_cmd;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use epps_core::par::Execution;

#[derive(Debug, Parser)]
#[command(name = "epps", version, about = "Epps-effect simulation, estimation and tick-data analysis")]
struct Cli {
    /// Worker threads for replications (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run replications on the calling thread only.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one price model or arrival process and write its paths.
    Simulate(SimulateArgs),
    /// Replicated Epps curve from a figure preset or a recipe file.
    Epps(EppsArgs),
    /// Trade-file statistics, Epps curves and k-skip verdicts.
    Taq(TaqArgs),
    /// Classify an existing curve JSON with the early/late gap rule.
    Verdict(VerdictArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Gbm,
    Merton,
    HawkesPrice,
    PoissonArrivals,
    HawkesArrivals,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["preset", "config"]))]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    /// Built-in parameter set.
    #[arg(long, value_parser = ["paper"])]
    pub preset: Option<String>,
    /// TOML file with the model parameters.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Horizon in seconds.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["figure", "config"]))]
pub struct EppsArgs {
    /// Figure preset: 2a 2b 3a 3b 5 6a 6b 8a 8b 9 10a 10b.
    #[arg(long)]
    pub figure: Option<String>,
    /// TOML recipe file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sampling intervals in seconds, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub dt_grid: Option<Vec<f64>>,
    /// Mean inter-arrival times in seconds, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub rates: Option<Vec<f64>>,
    #[arg(long)]
    pub kmax: Option<usize>,
    #[arg(long)]
    pub replications: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TaqCommand {
    Stats,
    Epps,
    Kskip,
}

#[derive(Debug, Args)]
pub struct TaqArgs {
    #[arg(value_enum)]
    pub command: TaqCommand,
    /// Trade CSV files.
    #[arg(long, num_args = 1..)]
    pub files: Vec<PathBuf>,
    /// TOML file with any of: files, pair, kmax, dt_grid, session_open, session_length, confidence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Two tickers, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub pair: Option<Vec<String>>,
    #[arg(long)]
    pub kmax: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub dt_grid: Option<Vec<f64>>,
    /// Session open in seconds since midnight.
    #[arg(long)]
    pub session_open: Option<f64>,
    #[arg(long)]
    pub confidence: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerdictArgs {
    /// Curve JSON written by `epps` or `taq`.
    #[arg(long)]
    pub curve: PathBuf,
    #[arg(long, default_value = "hayashi_yoshida")]
    pub estimator: String,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn read_config(path: &Path) -> Result<toml::Table> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}

pub fn command_line() -> String {
    std::env::args().skip(1).collect::<Vec<_>>().join(" ")
}

fn configure_threads(threads: Option<usize>) -> Result<()> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(exit::usage("--threads must be >= 1"));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("cannot configure the worker pool")?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads(cli.threads)?;
    let execution = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match cli.command {
        Command::Simulate(args) => simulate::run(&args),
        Command::Epps(args) => epps_cmd::run(&args, execution),
        Command::Taq(args) => taq_cmd::run(&args, execution),
        Command::Verdict(args) => epps_cmd::run_verdict(&args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::OK });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::from(exit::OK),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::code(&e))
        }
    }
}
