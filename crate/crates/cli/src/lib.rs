//! Command-line harness: single runs, invariant verification, parameter
//! sweeps and algorithm comparisons, with machine-readable output.

pub mod commands;
pub mod runner;
pub mod spec;

use brp_core::BrpError;
use thiserror::Error;

pub use commands::{cmd_compare, cmd_run, cmd_sweep, cmd_verify, cmd_verify_with, Report, SweepRow};
pub use spec::{RunSpec, Settings};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Core(#[from] BrpError),

    #[error("invalid spec: {0}")]
    Spec(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{0}")]
    Io(String),
}
