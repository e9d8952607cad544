//! The `fracdigit` command line: argument definitions and the subcommands
//! behind them.

pub mod commands;
pub mod study;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use commands::run;

/// Replicate count used when `--full-scale` is given.
pub const FULL_SCALE_REPLICATES: usize = 1_000_000;
/// Power-study run count used when `--full-scale` is given.
pub const FULL_SCALE_RUNS: usize = 5000;

#[derive(Debug, Parser)]
#[command(name = "fracdigit", version, about = "Exact tests of Benford's law on first digits and fractional significands")]
pub struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test a data file against Benford's law.
    Test(TestArgs),
    /// Run a power or size study described by a TOML file.
    Power(PowerArgs),
    /// Tabulate Monte Carlo null quantiles.
    Nulltab(NulltabArgs),
    /// Write simulated significands in the input line format.
    Simulate(SimulateArgs),
    /// QQ data of fractional significands against their null quantiles.
    Qq(QqArgs),
    /// Grid of the limiting joint density of (Q1, Q2).
    Density(DensityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NullArg {
    Auto,
    Plain,
    Truncated,
    Rounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    Off,
    On,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Truncate,
    Round,
}

#[derive(Debug, Args)]
pub struct ReplicateArgs {
    /// Monte Carlo null replicates; 0 means asymptotic p-values only.
    #[arg(long = "B", visible_alias = "replicates", default_value_t = 100_000)]
    pub b: usize,

    /// Use 10^6 replicates (and 5000 runs for power studies).
    #[arg(long)]
    pub full_scale: bool,

    /// Seed of every random stream; results are reproducible from it.
    #[arg(long)]
    pub seed: u64,

    /// Worker threads (results do not depend on it).
    #[arg(long)]
    pub workers: Option<usize>,

    /// Directory for cached null replicates.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Input file, one value per line ('-' for standard input).
    pub input: PathBuf,

    /// Statistic to compute (repeatable; default all).
    #[arg(long = "stat")]
    pub stats: Vec<String>,

    #[command(flatten)]
    pub replicates: ReplicateArgs,

    /// Nominal size of the tests.
    #[arg(long, default_value_t = 0.01)]
    pub gamma: f64,

    #[arg(long, value_enum, default_value_t = NullArg::Auto)]
    pub null: NullArg,

    /// Spread discretized values over their last-digit cell.
    #[arg(long, value_enum, default_value_t = Toggle::Off)]
    pub jitter: Toggle,

    /// Values with more significant digits than this count as unrounded.
    #[arg(long, default_value_t = fracdigit_core::significand::DEFAULT_MAX_DIGITS)]
    pub max_digits: u32,

    /// Print the JSON report instead of the table.
    #[arg(long)]
    pub json: bool,

    /// Also write the JSON report to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    /// Study configuration (TOML).
    pub config: PathBuf,

    /// Write the rate table here (default: standard output).
    #[arg(long)]
    pub csv: Option<PathBuf>,

    /// Write the full JSON report here.
    #[arg(long)]
    pub json: Option<PathBuf>,

    /// Override the configured number of runs.
    #[arg(long)]
    pub runs: Option<usize>,

    /// Override the configured replicate count.
    #[arg(long = "B", visible_alias = "replicates")]
    pub b: Option<usize>,

    /// Use 10^6 replicates and 5000 runs.
    #[arg(long)]
    pub full_scale: bool,

    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct NulltabArgs {
    /// Statistic to tabulate (repeatable; default the five fractional tests).
    #[arg(long = "stat")]
    pub stats: Vec<String>,

    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,

    /// Test sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.10, 0.05, 0.01])]
    pub gamma: Vec<f64>,

    #[command(flatten)]
    pub replicates: ReplicateArgs,

    /// Discretize every null value to this many digits.
    #[arg(long)]
    pub digits: Option<u32>,

    #[arg(long, value_enum, default_value_t = ModeArg::Truncate)]
    pub mode: ModeArg,

    /// Write the table here (default: standard output).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Data model, e.g. benford, manipulated:uniform:5, contaminated:0.2:gb:2.
    #[arg(long, default_value = "benford")]
    pub model: String,

    #[arg(long)]
    pub n: usize,

    #[arg(long)]
    pub seed: u64,

    /// Write every value with this many significant digits.
    #[arg(long, conflicts_with = "profile")]
    pub digits: Option<u32>,

    /// Counts of values with 1, 2, ... significant digits, comma separated;
    /// the rest are written in full.
    #[arg(long, value_delimiter = ',')]
    pub profile: Option<Vec<usize>>,

    #[arg(long, value_enum, default_value_t = ModeArg::Truncate)]
    pub mode: ModeArg,

    /// Output file (default: standard output).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QqArgs {
    /// Input file, one value per line ('-' for standard input).
    pub input: PathBuf,

    /// Null samples pooled for the quantiles.
    #[arg(long = "B", visible_alias = "replicates", default_value_t = 1000)]
    pub b: usize,

    #[arg(long)]
    pub seed: u64,

    /// `auto` discretizes the null like the data; `plain` never does.
    #[arg(long, value_enum, default_value_t = NullArg::Auto)]
    pub null: NullArg,

    #[arg(long, default_value_t = fracdigit_core::significand::DEFAULT_MAX_DIGITS)]
    pub max_digits: u32,

    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long, default_value_t = 30.0)]
    pub x1_max: f64,

    #[arg(long, default_value_t = 40.0)]
    pub x2_max: f64,

    #[arg(long, default_value_t = 0.5)]
    pub step: f64,

    #[arg(long)]
    pub output: Option<PathBuf>,
}
