//! `crouter` — cost-aware concept-based query routing from the command line.
//!
//! Exit codes: 0 success, 1 user error (bad flags, missing or malformed
//! inputs), 2 internal error.

mod commands;
mod context;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use context::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "crouter",
    version,
    about = "Cost-aware, concept-based query routing toolkit",
    subcommand_required = true,
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: commands::Command,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if e.kind() == ErrorKind::DisplayHelp || e.kind() == ErrorKind::DisplayVersion =>
        {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::User(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(CliError::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(2)
        }
    }
}
