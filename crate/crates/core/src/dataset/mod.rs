//! Feature schemas, validated datasets and the statistics computed from them.

mod covariance;
mod data;
mod percentile;
mod prototype;
mod schema;

pub use covariance::{default_shrinkage, CovarianceModel};
pub(crate) use data::validate_row;
pub use data::{Dataset, Label};
pub use percentile::EmpiricalDistribution;
pub use prototype::{class_prototype, ClassPrototypes};
pub use schema::{FeatureKind, FeatureSchema, FeatureSpec, OneHotGroup};

use alloc::string::String;

/// Errors raised while building or querying datasets and their statistics.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DatasetError {
    #[error("schema has no features")]
    EmptySchema,
    #[error("duplicate feature name `{0}`")]
    DuplicateFeature(String),
    #[error("one-hot group `{group}` has {members} member(s); at least 2 required")]
    GroupTooSmall { group: String, members: usize },
    #[error("feature `{name}`: actionability weight must be > 0 (got {weight})")]
    InvalidWeight { name: String, weight: f64 },
    #[error("feature `{name}`: lower bound {lower} must be below upper bound {upper}")]
    InvalidBounds { name: String, lower: f64, upper: f64 },
    #[error("dataset is empty")]
    Empty,
    #[error("row {row}: expected {expected} values, found {found}")]
    RowLength { row: usize, expected: usize, found: usize },
    #[error("row {row}, feature `{feature}`: non-finite value")]
    NonFinite { row: usize, feature: String },
    #[error("row {row}, feature `{feature}`: value {value} outside bounds [{lower}, {upper}]")]
    OutOfBounds { row: usize, feature: String, value: f64, lower: f64, upper: f64 },
    #[error("row {row}: group constraint violated for one-hot group `{group}`")]
    GroupConstraint { row: usize, group: String },
    #[error("label count {labels} does not match row count {rows}")]
    LabelCount { rows: usize, labels: usize },
    #[error("feature `{0}` is one-hot; percentiles are defined for continuous features only")]
    NotContinuous(String),
    #[error("feature index {0} out of range")]
    FeatureIndex(usize),
    #[error("need at least 2 rows to estimate a covariance")]
    TooFewRows,
    #[error("covariance not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),
    #[error("eigendecomposition failed on non-finite input")]
    Eigen,
    #[error("shrinkage must be finite and >= 0")]
    InvalidShrinkage,
    #[error("no rows carry label {0}")]
    MissingLabel(Label),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
}
