//! Linear SVM representation, training and margin geometry.

mod svm;
mod train;

pub use svm::LinearSvm;
pub use train::{primal_objective, train_svm, TrainConfig};

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("dimension mismatch: model has {expected} features, input has {found}")]
    Dimension { expected: usize, found: usize },
    #[error("weight vector must be nonzero and finite")]
    ZeroWeights,
    #[error("single class: training data must contain both labels")]
    SingleClass,
    #[error("need at least 2 training rows")]
    TooFewRows,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("trainer did not converge within {iterations} iterations (duality gap {gap:e})")]
    NotConverged { iterations: usize, gap: f64 },
    #[error("a training row lies on the decision boundary; cannot rescale to a unit margin")]
    DegenerateMargin,
    #[error("support-vector tolerance must be >= 0")]
    NegativeTolerance,
    #[error("feature names do not match: {0}")]
    FeatureNames(String),
}
