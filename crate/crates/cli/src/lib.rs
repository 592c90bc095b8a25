//! File formats and command implementations behind the `recourse` binary.
//!
//! Datasets are delimited text with a header row, schemas and weight
//! overrides are TOML, models are JSON with an explicit format version.
//! Commands build all of their output in memory ([`commands::Output`]) and
//! are deterministic given inputs, seed and config.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod report;

pub use commands::{run, write_outputs, Output};
pub use config::{CommandKind, RunConfig, Settings};
pub use error::CliError;
