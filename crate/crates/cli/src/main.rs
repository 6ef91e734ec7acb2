//! `mtbp`: command-line front end for `mtbp-core`.
//!
//! Exit status is 0 on success, 1 when a computation fails and 2 when the
//! input (arguments or model file) is unusable. Nothing is written unless
//! the command succeeds.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Compute(String),
}

impl CliError {
    pub fn input(msg: impl ToString) -> Self {
        CliError::Input(msg.to_string())
    }

    pub fn compute(msg: impl ToString) -> Self {
        CliError::Compute(msg.to_string())
    }
}

impl From<mtbp_core::Error> for CliError {
    fn from(e: mtbp_core::Error) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Compute(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("mtbp: input error: {}", msg.replace('\n', " "));
            ExitCode::from(2)
        }
        Err(CliError::Compute(msg)) => {
            eprintln!("mtbp: error: {}", msg.replace('\n', " "));
            ExitCode::from(1)
        }
    }
}
