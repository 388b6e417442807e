//! Batch front end: configuration parsing, experiment orchestration and
//! artifact emission. The binary is a thin wrapper around [`execute`]; the
//! library surface exists so integration tests can drive full runs
//! in-process.

pub mod config;
pub mod execute;
mod writers;

use std::fmt;

pub use config::{parse_config, Command, Overrides, RunConfig};
pub use execute::{execute, Outcome};

/// Front-end errors: configuration problems, IO failures and propagated
/// toolkit errors. Each renders as a one-line machine-parsable reason.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Core(shotnoise_core::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config: {msg}"),
            CliError::Io(msg) => write!(f, "io: {msg}"),
            CliError::Core(e) => write!(f, "core: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<shotnoise_core::Error> for CliError {
    fn from(e: shotnoise_core::Error) -> Self {
        CliError::Core(e)
    }
}
