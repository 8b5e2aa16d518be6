//! Library behind the `spl` binary: configuration, subcommands and the
//! verification suite.

pub mod commands;
pub mod config;
pub mod verify;

use std::fmt;
use std::process::ExitCode;

pub use commands::Cli;

/// Failure of a subcommand, carrying its exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or parameters (exit 2).
    Usage(String),
    /// A failed check or replay mismatch (exit 1).
    Check(String),
    Core(spl_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use spl_core::Error as E;
        match self {
            CliError::Check(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Core(E::Io { .. } | E::Parse { .. } | E::Csv(_) | E::Json(_)) => 3,
            CliError::Core(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Check(m) => write!(f, "check failed: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<spl_core::Error> for CliError {
    fn from(e: spl_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Core(e.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn exit(result: CliResult<()>) -> ExitCode {
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spl: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
