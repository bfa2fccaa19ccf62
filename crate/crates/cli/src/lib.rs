//! Batch driver for the sequential auction toolkit: scenario files, run manifests and
//! the experiment subcommands behind the `seqauction` binary.

pub mod config;
pub mod manifest;
pub mod run;

use thiserror::Error;

/// A failed run, grouped by the exit code it maps to.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Failure {
    /// Unreadable or invalid scenario, manifest or flags.
    #[error("schema error: {0}")]
    Schema(String),
    /// The run finished but a checked property failed.
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Schema(_) => 2,
            Failure::Invariant(_) => 3,
            Failure::Numeric(_) => 4,
        }
    }
}
