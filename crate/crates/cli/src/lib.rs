//! Command-line front end: run decompositions from a config file, explain
//! rows, export networks, and classify held-out rows.

pub mod commands;
pub mod config;

use thd_core::ThdError;

pub use commands::{cmd_classify, cmd_export, cmd_run, cmd_trace, Manifest, TreeArtifact};
pub use config::{RunConfig, OUTPUT_DIR_ENV};

/// Exit status for success.
pub const EXIT_OK: i32 = 0;
/// Exit status for data or configuration errors.
pub const EXIT_DATA: i32 = 1;
/// Exit status for usage errors: bad arguments, unknown rows, nodes, or
/// formats.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] ThdError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(
                ThdError::InvalidRow(_) | ThdError::UnknownNode(_) | ThdError::UnknownFormat(_) | ThdError::UnknownFeature(_),
            ) => EXIT_USAGE,
            _ => EXIT_DATA,
        }
    }
}
