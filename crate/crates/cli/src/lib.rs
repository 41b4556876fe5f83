//! Command-line front end: configuration, sweeps and persisted results.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;

pub use commands::{cmd_couplings, cmd_curve, cmd_readout, cmd_verify, Summary, VerifyReport};
pub use config::{Resolved, RunConfig};
pub use error::CliError;
