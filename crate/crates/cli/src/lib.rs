//! File formats and command dispatch for the `qcoord` binary.

pub mod commands;
mod error;
pub mod format;

pub use commands::{run_command, Outcome, RunConfig};
pub use error::CliError;
