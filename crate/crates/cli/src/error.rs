use std::path::{Path, PathBuf};

use recourse_core::counterfactual::ParseMethodError;
use recourse_core::{AuditError, DatasetError, EvaluateError, ExplainError, ModelError};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("{}: model format_version {found} is not supported (expected {expected})", path.display())]
    FormatVersion { path: PathBuf, found: String, expected: u64 },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    UnknownMethod(#[from] ParseMethodError),
    #[error("no rows match the selector: {0}")]
    EmptySelection(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Explain(#[from] ExplainError),
    #[error(transparent)]
    Evaluate(#[from] EvaluateError),
    #[error(transparent)]
    Audit(#[from] AuditError),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn parse(path: &Path, message: impl std::fmt::Display) -> Self {
        CliError::Parse { path: path.to_path_buf(), message: message.to_string() }
    }

    /// Stable tag printed on failure, e.g. `error[empty_cohort]: ...`.
    pub fn class(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::FormatVersion { .. } => "format_version",
            CliError::Config(_) => "config",
            CliError::UnknownMethod(_) => "unknown_method",
            CliError::EmptySelection(_) => "empty_selection",
            CliError::Dataset(_) => "data",
            CliError::Model(ModelError::SingleClass) => "single_class",
            CliError::Model(_) => "model",
            CliError::Explain(e) => e.class(),
            CliError::Evaluate(EvaluateError::EmptyCohort) => "empty_cohort",
            CliError::Evaluate(_) => "evaluate",
            CliError::Audit(AuditError::EmptyCohort(_)) => "empty_cohort",
            CliError::Audit(AuditError::NoSuccesses) => "no_successes",
            CliError::Audit(AuditError::Explain(e)) => e.class(),
            CliError::Audit(AuditError::Model(_)) => "model",
        }
    }

    /// The one-line message written to stderr.
    pub fn line(&self) -> String {
        let msg = self.to_string().replace(['\n', '\r'], " ");
        format!("error[{}]: {msg}", self.class())
    }
}
