//! `sdopt`: config-driven runner for dominance-constrained optimization.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{EvaluateInputs, RunOptions};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(name = "sdopt", version, about = "Optimization under stochastic dominance constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the stochastic dual solver once per seed and write a report and traces.
    Solve(CommonArgs),
    /// Run the configured baselines once per seed and write a report.
    Baseline(CommonArgs),
    /// Write samples from a configured source to CSV (`--out` may name a file).
    Generate(CommonArgs),
    /// Score a fixed solution on supplied scenarios.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Comma-separated seeds replacing the config's list.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// JSON array, or an object with a `z` array.
    #[arg(long)]
    solution: PathBuf,
    /// Scenario CSV to evaluate on.
    #[arg(long)]
    scenarios: PathBuf,
    /// Reference sample CSV for independent references.
    #[arg(long)]
    reference: Option<PathBuf>,
}

fn options(common: CommonArgs) -> Result<(PathBuf, RunOptions), CliError> {
    if let Some(seeds) = &common.seeds {
        if seeds.is_empty() {
            return Err(CliError::Config("--seeds is empty".into()));
        }
    }
    let opts = RunOptions {
        out: common.out,
        seeds: common.seeds,
        quiet: common.quiet,
    };
    Ok((common.config, opts))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(common) => {
            let (config, opts) = options(common)?;
            let report = commands::cmd_solve(&config::load_config(&config)?, &opts)?;
            if report.runs.iter().any(|r| r.solver.as_ref().is_some_and(|s| s.solution.truncated)) {
                opts.progress("some runs were truncated by the time limit");
            }
        }
        Command::Baseline(common) => {
            let (config, opts) = options(common)?;
            commands::cmd_baseline(&config::load_config(&config)?, &opts)?;
        }
        Command::Generate(common) => {
            let (config, opts) = options(common)?;
            let path = commands::cmd_generate(&config::load_config(&config)?, &opts)?;
            opts.progress(format!("wrote {}", path.display()));
        }
        Command::Evaluate(args) => {
            let (config, opts) = options(args.common)?;
            let inputs = EvaluateInputs {
                solution: args.solution,
                scenarios: args.scenarios,
                reference: args.reference,
            };
            commands::cmd_evaluate(&config::load_config(&config)?, &inputs, &opts)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sdopt: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
