//! `intraday`: file-based pipeline for simulating, calibrating and valuing storage on the
//! intraday market model.

use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod cmd;
mod failure;
mod inputs;
mod manifest;

use failure::{CliResult, Failure};

#[derive(Debug, Parser)]
#[command(name = "intraday", version, about = "Intraday electricity price model: simulate, estimate, value, backtest")]
struct Cli {
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate price paths on a time grid.
    Simulate(cmd::simulate::Args),
    /// Estimate model parameters from tick data.
    Estimate(cmd::estimate::Args),
    /// Learn a battery trading policy on simulated paths.
    Value(cmd::value::Args),
    /// Apply a policy and the Spot strategy to observed sessions.
    Backtest(cmd::backtest::Args),
    /// Retrain per day on the day-ahead prices and backtest every strategy.
    Campaign(cmd::campaign::Args),
    /// Merge daily gain files into the annual table.
    Report(cmd::report::Args),
    /// Generate a synthetic tick dataset and day-ahead prices.
    Synth(cmd::synth::Args),
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::input("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::input(e.to_string()))?;
    }
    match cli.command {
        Command::Simulate(a) => cmd::simulate::run(a),
        Command::Estimate(a) => cmd::estimate::run(a),
        Command::Value(a) => cmd::value::run(a),
        Command::Backtest(a) => cmd::backtest::run(a),
        Command::Campaign(a) => cmd::campaign::run(a),
        Command::Report(a) => cmd::report::run(a),
        Command::Synth(a) => cmd::synth::run(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}

