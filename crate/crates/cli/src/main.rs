//! `modelspace` command-line interface.

mod args;
mod commands;
mod digest;
mod error;
mod report;
mod trace;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Expand(a) => commands::expand(a),
        Command::Gibbs(a) => commands::gibbs(a),
        Command::Exact(a) => commands::exact(a),
        Command::Compare(a) => commands::compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
