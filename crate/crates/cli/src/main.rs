//! The `gammadiv` command-line tool.

mod divergence;
mod example;
mod inputs;
mod output;
mod uq;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::output::Status;

/// Γ-divergence between probability measures, closed-form examples and
/// uncertainty-quantification bounds.
///
/// Exit status: 0 on success, 1 on input errors, 2 when a solver misses its
/// tolerance (the report is still written). The environment variable
/// GAMMADIV_MAX_ITER overrides the iteration cap of the divergence solvers.
#[derive(Debug, Parser)]
#[command(name = "gammadiv", version = gammadiv::VERSION)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Γ-divergence G(μ‖ν) between two measure files.
    #[command(after_help = divergence::CSV_HELP)]
    Divergence(divergence::DivergenceArgs),
    /// Closed-form examples with a numeric cross-check.
    #[command(after_help = example::CSV_HELP)]
    Example(example::ExampleArgs),
    /// Uncertainty-quantification bounds.
    #[command(subcommand)]
    Uq(uq::UqCommand),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Divergence(args) => divergence::run(args),
        Command::Example(args) => example::run(args),
        Command::Uq(cmd) => uq::run(cmd),
    };
    match result {
        Ok(Status::Converged) => ExitCode::SUCCESS,
        Ok(Status::NonConvergence) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
