mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::Resolved;
use crate::error::Result;

#[derive(Parser)]
#[command(name = "gspde", version, about = "Simulate and verify SPDEs driven by Wiener and fractional-type Gaussian noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `master_seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `output_dir` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for Monte Carlo loops (outputs do not depend on it).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Sample Gaussian paths, write CSV and binary dumps and a covariance report.
    Sample,
    /// Run the configured verification suites.
    Verify,
    /// Solve the configured problem over an ensemble of runs.
    Solve,
    /// Estimate the strong convergence rate in the time step.
    Rates,
}

fn run(cli: Cli) -> Result<()> {
    let path = cli
        .config
        .ok_or_else(|| error::CliError::Config("--config PATH is required".into()))?;
    let cfg = config::load(&path, cli.seed, cli.out)?;
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(error::CliError::Config("--jobs must be at least 1".into()));
        }
        gspde::par::configure_threads(j);
    }
    let resolved = Resolved::new(cfg);
    match cli.command {
        Command::Sample => commands::cmd_sample(resolved),
        Command::Verify => commands::cmd_verify(resolved),
        Command::Solve => commands::cmd_solve(resolved),
        Command::Rates => commands::cmd_rates(resolved),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
