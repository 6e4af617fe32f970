//! `sfk` — build, verify, invert and plot scalar-flat toric Kähler metrics.
//!
//! Exit codes: 0 success (all suites pass), 1 suite failure,
//! 2 input/validation error, 3 numerical failure.

mod args;
mod commands;
mod config;
mod plot;

use std::process::ExitCode;

use clap::Parser;
use sfk_core::{ErrorClass, SfkError};

use crate::args::{Cli, Command};
use crate::commands::{NumericalFailure, Outcome};

const EXIT_FAIL: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("SFK_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("SFK_THREADS must be a positive integer, got '{v}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<NumericalFailure>().is_some() {
        return EXIT_NUMERICAL;
    }
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<SfkError>() {
            return match e.class() {
                ErrorClass::Validation => EXIT_INPUT,
                ErrorClass::Numerical => EXIT_NUMERICAL,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_INPUT;
        }
    }
    EXIT_INPUT
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_INPUT);
    }
    let result = match &cli.command {
        Command::Build(a) => commands::build(a),
        Command::Verify(a) => commands::verify(a),
        Command::Invert(a) => commands::invert(a),
        Command::Plot(a) => commands::plot(a),
        Command::Potential(a) => commands::potential(a),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
