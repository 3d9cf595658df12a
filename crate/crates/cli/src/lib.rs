//! Command-line front end: argument parsing, run configuration, output
//! staging and exit codes.

pub mod args;
mod commands;
pub mod config;
pub mod error;
mod input;
mod output;

use args::{Cli, Command};
use error::Exit;

/// Runs one command and returns the process exit code. Progress goes to
/// stdout, warnings and errors to stderr.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Characterize(a) => commands::characterize(a),
        Command::Forecast(a) => commands::forecast(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Compare(a) => commands::compare(a),
        Command::Synth(a) => commands::synth(a),
    };
    match result {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            if report.warnings.is_empty() {
                Exit::Ok.code()
            } else {
                Exit::Warning.code()
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit.code()
        }
    }
}
