//! File formats: CSV datasets, TOML schemas and weight overrides, JSON models.

pub mod dataset;
pub mod model;
pub mod schema;
pub mod weights;

use std::path::Path;

use crate::error::CliError;

pub(crate) fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
