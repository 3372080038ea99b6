//! Front end for the `owlscreen` binary.

pub mod args;
pub mod bench;
pub mod output;
pub mod problem;
pub mod train;
pub mod verify;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_ITERATION_CAP: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_NO_INPUT: i32 = 66;

/// Unreadable or malformed input data maps to `EXIT_NO_INPUT`.
pub fn error_code(err: &anyhow::Error) -> i32 {
    use owlscreen::Error;
    match err.downcast_ref::<Error>() {
        Some(Error::Io { .. } | Error::Parse { .. } | Error::NoSamples(_)) => EXIT_NO_INPUT,
        _ => EXIT_ERROR,
    }
}

pub fn run(argv: Vec<OsString>) -> i32 {
    let argv = match args::expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match cli.command {
        Command::Train(a) => match train::run(&a) {
            Ok(s) => {
                println!(
                    "iterations {}  gap {:.3e}  objective {:.10}  active {}  nonzero {}",
                    s.iterations,
                    s.final_gap,
                    s.objective,
                    s.final_active_count,
                    s.nonzero_rows.len()
                );
                if s.converged {
                    EXIT_OK
                } else {
                    eprintln!("stopped at the iteration cap before reaching the gap tolerance");
                    EXIT_ITERATION_CAP
                }
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                error_code(&e)
            }
        },
        Command::Bench(a) => match bench::run(&a) {
            Ok(r) => {
                print!("{}", bench::table(&r));
                if r.screen_off.converged && r.screen_on.converged {
                    EXIT_OK
                } else {
                    EXIT_ITERATION_CAP
                }
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                error_code(&e)
            }
        },
        Command::Verify(a) => {
            let checks = verify::run(&a);
            for c in &checks {
                println!("{}", c.line());
            }
            if checks.iter().all(|c| c.passed()) {
                EXIT_OK
            } else {
                EXIT_ERROR
            }
        }
    }
}
