use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use effham::cli;

/// Effective Hamiltonians and dynamical dressing for Raman-driven trapped
/// ions.
#[derive(Parser)]
#[command(name = "effham", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the C/Z decomposition and the analytic effective model.
    Decompose {
        /// TOML run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides output.directory from the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Benchmark the dressed and effective evolutors against exact
    /// propagation (writes compare.csv).
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Truncation-error study over a list of perturbative parameters
    /// (writes sweep.csv and summary.json).
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated λ values; detunings are rescaled at fixed g.
        #[arg(long, value_delimiter = ',')]
        lambdas: Vec<f64>,
    },
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let result = match &args.command {
        Command::Decompose { config, out } => cli::cmd_decompose(config, out.as_deref()),
        Command::Compare { config, out } => cli::cmd_compare(config, out.as_deref()),
        Command::Sweep { config, out, lambdas } => {
            cli::cmd_sweep(config, out.as_deref(), lambdas)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
