//! Library half of the `hetbo` command-line tool. Every subcommand is a plain
//! function returning `Result<(), CliError>` so integration tests can call
//! them without spawning a process.

mod benchmark;
pub mod config;
mod demo;
mod fit_compare;
mod output;
pub mod plot;
mod synth;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hetbo::{CampaignError, GpError, ObjectiveError};

pub use benchmark::{cmd_benchmark, parse_method, BenchmarkOutcome, Method};
pub use demo::cmd_demo_fit;
pub use fit_compare::{cmd_fit_compare, compare_on_splits, FitCompareReport};
pub use synth::{cmd_synth, synthetic_sin_dataset, FLAT_NOISE_STD};

/// Failure with the process exit code it maps to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub const CONFIG: i32 = 2;
    pub const DATA: i32 = 3;
    pub const RUNTIME: i32 = 1;

    pub fn config(message: impl Into<String>) -> Self {
        Self { code: Self::CONFIG, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self { code: Self::DATA, message: message.into() }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self { code: Self::RUNTIME, message: message.into() }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<ObjectiveError> for CliError {
    fn from(e: ObjectiveError) -> Self {
        match e {
            ObjectiveError::FileNotFound(_)
            | ObjectiveError::MalformedRow { .. }
            | ObjectiveError::InsufficientData { .. }
            | ObjectiveError::Io(_) => CliError::data(format!("--data: {e}")),
            other => CliError::runtime(other.to_string()),
        }
    }
}

impl From<CampaignError> for CliError {
    fn from(e: CampaignError) -> Self {
        match e {
            CampaignError::Config(m) => CliError::config(m),
            CampaignError::Objective(o) => o.into(),
            other => CliError::runtime(other.to_string()),
        }
    }
}

impl From<GpError> for CliError {
    fn from(e: GpError) -> Self {
        CliError::runtime(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Problem {
    #[value(name = "sin1d")]
    Sin1d,
    Branin,
    Soil,
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::Sin1d => "sin1d",
            Problem::Branin => "branin",
            Problem::Soil => "soil",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hetbo", version, about = "Heteroscedastic Bayesian optimisation benchmarks")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run optimisation campaigns for several methods and seeds.
    Benchmark(BenchmarkArgs),
    /// Compare held-out NLPD of the homoscedastic GP and the MLHGP.
    FitCompare(FitCompareArgs),
    /// Fit both surrogates on a sample of a toy problem and plot them.
    DemoFit(DemoFitArgs),
    /// Write a synthetic dataset in the two-column pool format.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct BenchmarkArgs {
    #[arg(long, value_enum)]
    pub problem: Problem,
    /// `surrogate:acquisition`, e.g. `gp:ei`, `mlhgp:anpei`. Repeatable or
    /// comma separated. Defaults to gp:ei, mlhgp:anpei and mlhgp:het-aei.
    #[arg(long = "method", value_delimiter = ',')]
    pub methods: Vec<String>,
    /// Run seeds 0..N.
    #[arg(long, conflicts_with = "seed_list")]
    pub seeds: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub seed_list: Vec<u64>,
    /// Evaluations after the initial design. Defaults: sin1d 30, branin 50,
    /// soil until the pool is exhausted.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Initial design size (soil: size of the initial pool subset).
    #[arg(long)]
    pub init: Option<usize>,
    #[arg(long, default_value_t = hetbo::acquisition::DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = hetbo::mlhgp::DEFAULT_EM_ITERATIONS)]
    pub em_iters: usize,
    #[arg(long, default_value_t = hetbo::mlhgp::DEFAULT_SAMPLE_COUNT)]
    pub sample_count: usize,
    /// Pool CSV for the soil problem.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Flat `key = value` file mirroring the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FitCompareArgs {
    /// Two-column CSV with a header.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub splits: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = hetbo::mlhgp::DEFAULT_EM_ITERATIONS)]
    pub em_iters: usize,
    #[arg(long, default_value_t = hetbo::mlhgp::DEFAULT_SAMPLE_COUNT)]
    pub sample_count: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DemoFitArgs {
    #[arg(long, value_enum)]
    pub problem: Problem,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of noisy samples to fit on.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = hetbo::mlhgp::DEFAULT_EM_ITERATIONS)]
    pub em_iters: usize,
    #[arg(long, default_value_t = hetbo::mlhgp::DEFAULT_SAMPLE_COUNT)]
    pub sample_count: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    /// Soil-like pool: two minima, noise growing with bulk density.
    Soil,
    /// `sin(x) + 0.2x` on [0, 10] with noise std `0.25x`.
    #[value(name = "sin1d")]
    Sin1d,
    /// `sin(x) + 0.2x` on [0, 10] with constant noise std 0.5.
    Flat,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: SynthKind,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (including the program name), merges any `--config` file
/// and runs the subcommand. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match config::expand_config_args(&args) {
        Ok(a) => a,
        Err(e) => return report(e),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { CliError::CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(e) => report(e),
    }
}

pub fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Benchmark(a) => cmd_benchmark(a).map(|_| ()),
        Command::FitCompare(a) => cmd_fit_compare(a).map(|_| ()),
        Command::DemoFit(a) => cmd_demo_fit(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

fn report(e: CliError) -> i32 {
    eprintln!("error: {}", e.message);
    e.code
}
