//! `smixup` command-line runner.
//!
//! Exit codes: 0 success, 2 usage, 3 config, 4 data, 5 numeric (the run
//! diverged; artifacts are still written), 6 output I/O, 7 internal. Every
//! failure prints one line of JSON to stderr.

mod artifacts;
mod commands;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::failure::Failure;

#[derive(Parser, Debug)]
#[command(name = "smixup", version, about = "Structural mixup training for GCN node classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train one model and write its run directory.
    Train(TrainArgs),
    /// Run a hyperparameter grid over several seeds (resumable).
    Sweep(SweepArgs),
    /// Homophily bucket report recomputed from a run directory.
    Analyze(AnalyzeArgs),
    /// Generate a stochastic block model dataset bundle.
    Sbm(SbmArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    F32,
    #[default]
    F64,
}

/// Flags shared by `train` and `sweep`.
#[derive(Args, Debug)]
pub struct RunArgs {
    /// Dataset bundle directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Flat `key = value` config file; `--set` wins over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Config override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long, value_enum, default_value_t)]
    pub precision: Precision,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Run directory to create or overwrite.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Grid such as `r=0.1,0.2;m=0.1,0.3`; empty means the base config only.
    #[arg(long, default_value = "")]
    pub grid: String,
    /// Seeds as a list (`0,1,2`) or half-open range (`0..10`).
    #[arg(long, default_value = "0")]
    pub seeds: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Run directory written by `train`.
    #[arg(long)]
    pub run: PathBuf,
    /// Dataset bundle to recompute homophily from; defaults to the ratios
    /// stored in the run's predictions.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Bucket threshold; defaults to the mean homophily over all nodes.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Where to write the report; defaults to the run directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SbmArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pub nodes: usize,
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    #[arg(long, default_value_t = 32)]
    pub features: usize,
    #[arg(long, default_value_t = 3.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0.7)]
    pub homophily: f64,
    #[arg(long, default_value_t = 10.0)]
    pub degree: f64,
    #[arg(long, default_value_t = 20)]
    pub train_per_class: usize,
    #[arg(long, default_value_t = 500)]
    pub val: usize,
    #[arg(long, default_value_t = 1000)]
    pub test: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return Failure::usage(e.to_string().trim_end()).report(),
    };
    let result = match cli.command {
        Command::Train(a) => commands::train::run(&a),
        Command::Sweep(a) => commands::sweep::run(&a),
        Command::Analyze(a) => commands::analyze::run(&a),
        Command::Sbm(a) => commands::sbm::run(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
