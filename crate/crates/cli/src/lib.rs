//! `newsgauge` command-line front end.
//!
//! Every stage reads and writes files, so stages can be run one at a time or
//! chained with `pipeline`. Exit codes: 0 success, 1 invalid input or
//! configuration, 2 runtime failure (I/O, network).

mod args;
mod commands;
pub mod config;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;
use newsgauge_core::annotator::ClientError;
use tracing_subscriber::EnvFilter;

pub use args::Cli;

pub const LOG_ENV: &str = "NEWSGAUGE_LOG";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

fn init_logging() {
    let filter = EnvFilter::try_from_env(LOG_ENV).unwrap_or_else(|_| EnvFilter::new("info"));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .with_target(false)
        .try_init();
}

/// Exit code for an error: runtime failures are I/O and network problems,
/// everything else is treated as bad input.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    use newsgauge_core::Error as CoreError;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            return match e {
                CoreError::Io { .. } => EXIT_RUNTIME,
                _ => EXIT_INVALID,
            };
        }
        if let Some(e) = cause.downcast_ref::<ClientError>() {
            return match e {
                ClientError::Config(_) => EXIT_INVALID,
                ClientError::Input(CoreError::Io { .. }) => EXIT_RUNTIME,
                ClientError::Input(_) => EXIT_INVALID,
                _ => EXIT_RUNTIME,
            };
        }
        if cause.is::<std::io::Error>() {
            return EXIT_RUNTIME;
        }
    }
    EXIT_INVALID
}

/// Parse `argv` (program name first), run the command and return the exit
/// code. Logs go to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INVALID,
            };
        }
    };
    init_logging();
    match commands::dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            tracing::error!("{e:#}");
            exit_code(&e)
        }
    }
}
