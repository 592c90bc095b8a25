//! Counterfactual search: turns a query into a mixed-integer program, solves
//! it and certifies the result.
//!
//! Every variant asks for the cheapest `x'` with `y' (<w, x'> + b) >= 1`,
//! where `y'` is the target label (by default the opposite of the current
//! prediction). The variants differ in the cost:
//!
//! | variant             | cost                                    |
//! |---------------------|-----------------------------------------|
//! | `plain`             | `sum_i W_i (x_i - x'_i)^2`              |
//! | `correlated`        | `delta^T S W S delta`, `S = cov^(-1/2)` |
//! | `plausible`         | plain, plus `|x' - v_y'|_inf <= eps`     |
//! | `sparse`            | `sum_i W_i |x_i - x'_i|`                |
//! | `sparse_correlated` | `|W S delta|_1`                         |
//!
//! Features with infinite weight are frozen: they are substituted as
//! constants before solving, so their delta is exactly zero.

mod baseline;
mod build;
mod stability;

pub use baseline::{nearest_support_vector, post_hoc_correlation};
pub use build::{Binding, Explainer, Problem};
pub use stability::{stability_radius, verify_stability, StabilityReport};

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::dataset::{ClassPrototypes, CovarianceModel, Dataset, DatasetError, FeatureSchema, Label};
use crate::math::{abs, sqrt};
use crate::model::{LinearSvm, ModelError};
use crate::optim::{SolveStatus, SolverError};

/// Slack allowed on the margin constraint when judging validity.
pub const VALIDITY_TOL: f64 = 1e-6;

/// Which optimization problem to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Plain,
    Correlated,
    Plausible,
    Sparse,
    SparseCorrelated,
}

impl Variant {
    pub const ALL: [Variant; 5] =
        [Variant::Plain, Variant::Correlated, Variant::Plausible, Variant::Sparse, Variant::SparseCorrelated];

    pub fn as_str(self) -> &'static str {
        Method::from(self).as_str()
    }

    pub fn is_sparse(self) -> bool {
        matches!(self, Variant::Sparse | Variant::SparseCorrelated)
    }

    pub fn uses_covariance(self) -> bool {
        matches!(self, Variant::Correlated | Variant::SparseCorrelated)
    }
}

/// Any procedure that produces a [`Counterfactual`]: the optimization
/// variants plus the two non-optimizing baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Plain,
    Correlated,
    Plausible,
    Sparse,
    SparseCorrelated,
    NearestSupportVector,
    PostHocCorrelation,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Plain,
        Method::Correlated,
        Method::Plausible,
        Method::Sparse,
        Method::SparseCorrelated,
        Method::NearestSupportVector,
        Method::PostHocCorrelation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Plain => "plain",
            Method::Correlated => "correlated",
            Method::Plausible => "plausible",
            Method::Sparse => "sparse",
            Method::SparseCorrelated => "sparse_correlated",
            Method::NearestSupportVector => "nearest_sv",
            Method::PostHocCorrelation => "post_hoc_correlation",
        }
    }

    pub fn variant(self) -> Option<Variant> {
        match self {
            Method::Plain => Some(Variant::Plain),
            Method::Correlated => Some(Variant::Correlated),
            Method::Plausible => Some(Variant::Plausible),
            Method::Sparse => Some(Variant::Sparse),
            Method::SparseCorrelated => Some(Variant::SparseCorrelated),
            Method::NearestSupportVector | Method::PostHocCorrelation => None,
        }
    }
}

impl From<Variant> for Method {
    fn from(v: Variant) -> Method {
        match v {
            Variant::Plain => Method::Plain,
            Variant::Correlated => Method::Correlated,
            Variant::Plausible => Method::Plausible,
            Variant::Sparse => Method::Sparse,
            Variant::SparseCorrelated => Method::SparseCorrelated,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown method `{given}` (valid: {valid})")]
pub struct ParseMethodError {
    pub given: String,
    pub valid: String,
}

impl FromStr for Method {
    type Err = ParseMethodError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| ParseMethodError { given: s.into(), valid: Method::ALL.map(Method::as_str).join(", ") })
    }
}

impl FromStr for Variant {
    type Err = ParseMethodError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| ParseMethodError { given: s.into(), valid: Variant::ALL.map(Variant::as_str).join(", ") })
    }
}

/// Half-width of the box around the target-class prototype.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlausibilityRadius {
    /// Same radius for every coordinate, in raw feature units.
    Absolute(f64),
    /// `eps * sd_i` on continuous features and `eps` on one-hot indicators.
    Standardized(f64),
}

impl PlausibilityRadius {
    pub fn value(self) -> f64 {
        match self {
            PlausibilityRadius::Absolute(e) | PlausibilityRadius::Standardized(e) => e,
        }
    }
}

impl Default for PlausibilityRadius {
    fn default() -> Self {
        PlausibilityRadius::Standardized(1.0)
    }
}

impl fmt::Display for PlausibilityRadius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlausibilityRadius::Absolute(e) => write!(f, "{e} (absolute)"),
            PlausibilityRadius::Standardized(e) => write!(f, "{e} (standardized)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterfactualQuery {
    pub x: Vec<f64>,
    /// Desired label; `None` means the opposite of the current prediction.
    pub target: Option<Label>,
    pub variant: Variant,
    /// Per-feature weights replacing the schema's.
    pub weights: Option<Vec<f64>>,
    /// Only read by [`Variant::Plausible`]; defaults to
    /// [`PlausibilityRadius::default`].
    pub epsilon: Option<PlausibilityRadius>,
    /// Extra features to freeze.
    pub frozen: Vec<usize>,
}

impl CounterfactualQuery {
    pub fn new(x: Vec<f64>) -> Self {
        CounterfactualQuery {
            x,
            target: None,
            variant: Variant::Plain,
            weights: None,
            epsilon: None,
            frozen: Vec::new(),
        }
    }

    pub fn variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn target(mut self, target: Label) -> Self {
        self.target = Some(target);
        self
    }

    pub fn weights(mut self, weights: Vec<f64>) -> Self {
        self.weights = Some(weights);
        self
    }

    pub fn epsilon(mut self, epsilon: PlausibilityRadius) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    pub fn freeze(mut self, feature: usize) -> Self {
        self.frozen.push(feature);
        self
    }
}

/// Data-derived inputs some variants need.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Statistics {
    pub covariance: Option<CovarianceModel>,
    pub prototypes: Option<ClassPrototypes>,
    /// Per-feature scale for standardized plausibility radii.
    pub scales: Option<Vec<f64>>,
}

impl Statistics {
    /// Fits everything from `data`. `shrinkage = None` uses
    /// [`crate::dataset::default_shrinkage`].
    pub fn fit(data: &Dataset, shrinkage: Option<f64>) -> Result<Self, DatasetError> {
        let lambda = shrinkage.unwrap_or_else(|| crate::dataset::default_shrinkage(data));
        Ok(Statistics {
            covariance: Some(CovarianceModel::fit(data, lambda)?),
            prototypes: Some(ClassPrototypes::fit(data)?),
            scales: Some(feature_scales(data)),
        })
    }
}

/// Sample standard deviation of each continuous feature (1 where it is zero
/// or undefined) and 1 for one-hot indicators.
pub fn feature_scales(data: &Dataset) -> Vec<f64> {
    let means = data.feature_means();
    let n = data.len();
    (0..data.n_features())
        .map(|j| {
            if !data.schema().is_continuous(j) || n < 2 {
                return 1.0;
            }
            let ss: f64 = data.rows().map(|r| (r[j] - means[j]) * (r[j] - means[j])).sum();
            let sd = sqrt(ss / (n - 1) as f64);
            if sd > 0.0 {
                sd
            } else {
                1.0
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureChange {
    pub index: usize,
    pub name: String,
    pub original: f64,
    pub counterfactual: f64,
}

impl FeatureChange {
    pub fn delta(&self) -> f64 {
        self.counterfactual - self.original
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverStats {
    pub status: SolveStatus,
    pub nodes_explored: usize,
    pub gap: f64,
    pub binding: Vec<Binding>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterfactual {
    pub method: Method,
    pub x: Vec<f64>,
    pub x_prime: Vec<f64>,
    pub delta: Vec<f64>,
    pub target: Label,
    /// Cost of `delta` under the method's metric (squared for quadratic
    /// variants).
    pub objective: f64,
    pub decision_value: f64,
    pub valid: bool,
    pub stability_radius: f64,
    pub changed_features: Vec<FeatureChange>,
    /// Absent for the baselines, which do not solve anything.
    pub solver: Option<SolverStats>,
}

impl Counterfactual {
    /// Fills the derived fields for a candidate `x_prime`.
    pub fn assess(
        model: &LinearSvm,
        schema: &FeatureSchema,
        method: Method,
        x: &[f64],
        x_prime: Vec<f64>,
        target: Label,
        objective: f64,
    ) -> Result<Counterfactual, ExplainError> {
        if x.len() != schema.len() || x_prime.len() != schema.len() {
            return Err(ExplainError::Dimension { expected: schema.len(), found: x.len().min(x_prime.len()) });
        }
        let decision_value = model.decision_value(&x_prime)?;
        let groups_ok = schema.groups().iter().all(|g| {
            g.members.iter().all(|&s| x_prime[s] == 0.0 || x_prime[s] == 1.0)
                && g.members.iter().filter(|&&s| x_prime[s] == 1.0).count() == 1
        });
        let valid = groups_ok && target.sign() * decision_value >= 1.0 - VALIDITY_TOL;
        let delta: Vec<f64> = x_prime.iter().zip(x).map(|(a, b)| a - b).collect();
        let changed_features = (0..x.len())
            .filter(|&i| is_changed(x[i], x_prime[i]))
            .map(|i| FeatureChange {
                index: i,
                name: schema.feature(i).name.clone(),
                original: x[i],
                counterfactual: x_prime[i],
            })
            .collect();
        Ok(Counterfactual {
            method,
            x: x.to_vec(),
            stability_radius: abs(decision_value) / model.weight_norm(),
            x_prime,
            delta,
            target,
            objective,
            decision_value,
            valid,
            changed_features,
            solver: None,
        })
    }

    pub fn n_changed(&self) -> usize {
        self.changed_features.len()
    }

    /// Changed features that are continuous in `schema`.
    pub fn n_changed_continuous(&self, schema: &FeatureSchema) -> usize {
        self.changed_features.iter().filter(|c| schema.is_continuous(c.index)).count()
    }
}

/// Changes smaller than this (relative to `max(1, |x|)`) are solver noise.
pub(crate) fn change_threshold(original: f64) -> f64 {
    1e-9 * abs(original).max(1.0)
}

pub(crate) fn is_changed(original: f64, new: f64) -> bool {
    abs(new - original) > change_threshold(original)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExplainError {
    #[error("dimension mismatch: expected {expected} features, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error(transparent)]
    Data(#[from] DatasetError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("invalid weight {weight} for feature {feature}: weights must be positive (inf freezes)")]
    InvalidWeight { feature: usize, weight: f64 },
    #[error("feature index {0} out of range")]
    FeatureIndex(usize),
    #[error("plausibility radius must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("stability radius must be finite and >= 0, got {0}")]
    InvalidRadius(f64),
    #[error("missing statistics: {0} variant needs {1}")]
    MissingStatistics(&'static str, &'static str),
    #[error("all features are frozen")]
    AllFrozen,
    #[error("margin unreachable: frozen features and bounds cannot reach label {target}")]
    MarginUnreachable { target: Label },
    #[error("epsilon too small: the prototype box {epsilon} does not reach the margin")]
    EpsilonTooSmall { epsilon: PlausibilityRadius },
    #[error("solver stopped ({}) before finding a feasible point", .0.as_str())]
    NoIncumbent(SolveStatus),
    #[error("no support vectors with label {0}")]
    NoSupportVectors(Label),
    #[error("every support vector with label {0} differs on a frozen feature")]
    NoReachableSupportVector(Label),
}

impl ExplainError {
    /// Short machine-readable tag for logs and exit messages.
    pub fn class(&self) -> &'static str {
        match self {
            ExplainError::Dimension { .. } => "dimension",
            ExplainError::Data(_) => "data",
            ExplainError::Model(_) => "model",
            ExplainError::Solver(_) => "solver",
            ExplainError::InvalidWeight { .. } | ExplainError::FeatureIndex(_) => "invalid_query",
            ExplainError::InvalidEpsilon(_) | ExplainError::InvalidRadius(_) => "invalid_query",
            ExplainError::MissingStatistics(..) => "missing_statistics",
            ExplainError::AllFrozen => "all_frozen",
            ExplainError::MarginUnreachable { .. } => "margin_unreachable",
            ExplainError::EpsilonTooSmall { .. } => "epsilon_too_small",
            ExplainError::NoIncumbent(_) => "solver_limit",
            ExplainError::NoSupportVectors(_) | ExplainError::NoReachableSupportVector(_) => "no_support_vectors",
        }
    }
}
