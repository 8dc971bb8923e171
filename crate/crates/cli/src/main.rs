//! `dpa`: budget accounting from the command line.
//!
//! Exit codes: 0 success, 1 selftest found failures, 2 rejected input (one
//! JSON diagnostics object on standard error), 64 unknown verb, 66 file
//! could not be read or written.

mod args;
mod emit;
mod verbs;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::Cli;
use crate::emit::{CliError, EXIT_UNKNOWN_VERB, EXIT_VALIDATION};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => return parse_failure(e),
    };
    let outcome = match verbs::run(&cli) {
        Ok(outcome) => outcome,
        Err(e) => return failure(e),
    };
    match emit::deliver(cli.out.as_deref(), &outcome.text) {
        Ok(()) => ExitCode::from(outcome.status),
        Err(e) => failure(e),
    }
}

fn failure(e: CliError) -> ExitCode {
    eprintln!("{}", e.diagnostics());
    ExitCode::from(e.exit_code())
}

fn parse_failure(e: clap::Error) -> ExitCode {
    match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
            let _ = e.print();
            ExitCode::SUCCESS
        }
        ErrorKind::InvalidSubcommand => {
            eprintln!(
                "{}",
                serde_json::json!({ "error": "unknown-verb", "message": e.to_string() })
            );
            ExitCode::from(EXIT_UNKNOWN_VERB)
        }
        _ => {
            eprintln!("{}", serde_json::json!({ "error": "usage", "message": e.to_string() }));
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}
