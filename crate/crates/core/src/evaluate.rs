//! Percentile-shift costs of counterfactuals and a harness that compares
//! explanation methods on a cohort.
//!
//! All three costs look only at continuous features. Categorical changes are
//! counted separately.
//!
//! - `f1(x, x') = max_i |Q_i(x'_i) - Q_i(x_i)|`
//! - `f2(x, x') = sum_i |ln((1 - Q_i(x'_i)) / (1 - Q_i(x_i)))| + |ln(Q_i(x'_i) / Q_i(x_i))|`
//!   ("symmetric maximum log percentile shift"; it is a sum, as written)
//! - `f3(x') = min over reference rows r of f1(r, x')`

use alloc::string::String;
use alloc::vec::Vec;

use crate::counterfactual::{
    nearest_support_vector, post_hoc_correlation, Counterfactual, CounterfactualQuery, ExplainError, Explainer, Method,
};
use crate::dataset::{Dataset, DatasetError, EmpiricalDistribution, Label};
use crate::math::{abs, ln};

/// Tolerance passed to [`crate::LinearSvm::support_vectors`] by the
/// nearest-support-vector method.
pub const SUPPORT_VECTOR_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvaluateError {
    #[error("no continuous features to compare")]
    NoContinuousFeatures,
    #[error("dimension mismatch: expected {expected} features, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("no reference rows with label {0}")]
    EmptyReference(Label),
    #[error("empty cohort")]
    EmptyCohort,
    #[error("no methods selected")]
    NoMethods,
    #[error(transparent)]
    Data(#[from] DatasetError),
}

fn shifts(x: &[f64], x_prime: &[f64], dist: &EmpiricalDistribution) -> Result<Vec<(f64, f64)>, EvaluateError> {
    if x.len() != dist.n_features() || x_prime.len() != dist.n_features() {
        let found = if x.len() != dist.n_features() { x.len() } else { x_prime.len() };
        return Err(EvaluateError::Dimension { expected: dist.n_features(), found });
    }
    let features = dist.continuous_features();
    if features.is_empty() {
        return Err(EvaluateError::NoContinuousFeatures);
    }
    features.into_iter().map(|i| Ok((dist.percentile(i, x[i])?, dist.percentile(i, x_prime[i])?))).collect()
}

/// Largest absolute percentile shift.
pub fn cost_f1(x: &[f64], x_prime: &[f64], dist: &EmpiricalDistribution) -> Result<f64, EvaluateError> {
    Ok(shifts(x, x_prime, dist)?.into_iter().fold(0.0, |m, (q, qp)| f64::max(m, abs(qp - q))))
}

/// Sum of absolute log-ratio shifts of both tails.
///
/// Log ratios are taken as differences of logs so that swapping `x` and
/// `x'` gives a bitwise identical value.
pub fn cost_f2(x: &[f64], x_prime: &[f64], dist: &EmpiricalDistribution) -> Result<f64, EvaluateError> {
    Ok(shifts(x, x_prime, dist)?.into_iter().map(|(q, qp)| abs(ln(1.0 - qp) - ln(1.0 - q)) + abs(ln(qp) - ln(q))).sum())
}

/// Rows `f3` compares against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reference {
    /// Every row of the dataset.
    #[default]
    AllRows,
    /// Only rows carrying this label.
    Class(Label),
}

/// `f1` distance from `x_prime` to the closest reference row.
pub fn cost_f3(
    x_prime: &[f64],
    data: &Dataset,
    dist: &EmpiricalDistribution,
    reference: Reference,
) -> Result<f64, EvaluateError> {
    if data.is_empty() {
        return Err(EvaluateError::EmptyDataset);
    }
    let mut best = f64::INFINITY;
    for (row, &label) in data.rows().zip(data.labels()) {
        if let Reference::Class(l) = reference {
            if l != label {
                continue;
            }
        }
        best = best.min(cost_f1(row, x_prime, dist)?);
    }
    match reference {
        Reference::Class(l) if best == f64::INFINITY => Err(EvaluateError::EmptyReference(l)),
        _ => Ok(best),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Costs {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    /// One-hot groups whose active category changed.
    pub categorical_changes: usize,
    /// Continuous features that moved.
    pub continuous_changes: usize,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Success(Costs),
    /// A counterfactual was produced but misses the margin.
    Invalid(Costs),
    /// No counterfactual; holds the error class and message.
    Failure {
        class: &'static str,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRecord {
    /// Row index in the benchmark data.
    pub instance: usize,
    pub method: Method,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub successes: usize,
    pub invalid: usize,
    pub failures: usize,
    /// Means over successes; `None` when there were none.
    pub mean_f1: Option<f64>,
    pub mean_f2: Option<f64>,
    pub mean_f3: Option<f64>,
    pub mean_categorical_changes: Option<f64>,
    pub mean_continuous_changes: Option<f64>,
}

/// Per-instance costs (ordered by instance, then by method as given) and
/// per-method means.
#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub records: Vec<InstanceRecord>,
    pub summaries: Vec<MethodSummary>,
    /// `f3` compared against rows of the target class only.
    pub class_filtered_f3: bool,
}

impl CostReport {
    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }
}

/// Costs of one counterfactual. With `class_filtered`, `f3` only compares
/// against rows labelled `cf.target`.
pub fn costs_of(
    cf: &Counterfactual,
    data: &Dataset,
    dist: &EmpiricalDistribution,
    class_filtered: bool,
) -> Result<Costs, EvaluateError> {
    let reference = if class_filtered { Reference::Class(cf.target) } else { Reference::AllRows };
    let schema = data.schema();
    let categorical_changes =
        schema.groups().iter().filter(|g| g.members.iter().any(|&m| cf.x[m] != cf.x_prime[m])).count();
    Ok(Costs {
        f1: cost_f1(&cf.x, &cf.x_prime, dist)?,
        f2: cost_f2(&cf.x, &cf.x_prime, dist)?,
        f3: cost_f3(&cf.x_prime, data, dist, reference)?,
        categorical_changes,
        continuous_changes: cf.n_changed_continuous(schema),
        objective: cf.objective,
    })
}

/// Runs one method on `query`.
///
/// The optimization variants go through [`Explainer::explain`];
/// `nearest_sv` picks the closest support vector of the target class and
/// `post_hoc_correlation` pushes the plain action through the covariance.
/// Both baselines report the plain weighted squared distance as objective.
pub fn run_method(
    ex: &Explainer<'_>,
    data: &Dataset,
    query: &CounterfactualQuery,
    method: Method,
) -> Result<Counterfactual, ExplainError> {
    if let Some(v) = method.variant() {
        return ex.explain_as(query, v);
    }
    let mut plain_q = query.clone();
    plain_q.variant = crate::counterfactual::Variant::Plain;
    let weights = ex.effective_weights(query)?;
    let target = ex.target(query)?;
    let mut cf = match method {
        Method::NearestSupportVector => {
            nearest_support_vector(ex.model(), data, &query.x, target, &weights, SUPPORT_VECTOR_TOL)?
        }
        _ => {
            let cov = ex
                .statistics()
                .covariance
                .as_ref()
                .ok_or(ExplainError::MissingStatistics("post_hoc_correlation", "a covariance model"))?;
            let plain = ex.explain(&plain_q)?;
            let mut moved = post_hoc_correlation(&query.x, &plain.delta, cov)?;
            // frozen coordinates stay put
            for (i, w) in weights.iter().enumerate() {
                if !w.is_finite() {
                    moved[i] = query.x[i];
                }
            }
            Counterfactual::assess(ex.model(), ex.schema(), method, &query.x, moved, target, 0.0)?
        }
    };
    cf.method = method;
    cf.objective = ex.cost_of(&plain_q, &cf.x_prime)?;
    Ok(cf)
}

/// Explains every row in `cohort` with every method and scores the results.
///
/// `query` is the template: its `x` is replaced by each row. Failures and
/// invalid counterfactuals are counted, never folded into the means.
pub fn benchmark(
    ex: &Explainer<'_>,
    data: &Dataset,
    dist: &EmpiricalDistribution,
    cohort: &[usize],
    methods: &[Method],
    query: &CounterfactualQuery,
    reference_class_filtered: bool,
) -> Result<CostReport, EvaluateError> {
    if cohort.is_empty() {
        return Err(EvaluateError::EmptyCohort);
    }
    if methods.is_empty() {
        return Err(EvaluateError::NoMethods);
    }
    let mut records = Vec::with_capacity(cohort.len() * methods.len());
    for &row in cohort {
        let mut q = query.clone();
        q.x = data.row(row).to_vec();
        for &method in methods {
            let outcome = match run_method(ex, data, &q, method) {
                Ok(cf) => {
                    let costs = costs_of(&cf, data, dist, reference_class_filtered)?;
                    if cf.valid {
                        Outcome::Success(costs)
                    } else {
                        Outcome::Invalid(costs)
                    }
                }
                Err(e) => Outcome::Failure { class: e.class(), message: alloc::format!("{e}") },
            };
            records.push(InstanceRecord { instance: row, method, outcome });
        }
    }
    let summaries = methods.iter().map(|&m| summarize(m, &records)).collect();
    Ok(CostReport { records, summaries, class_filtered_f3: reference_class_filtered })
}

fn summarize(method: Method, records: &[InstanceRecord]) -> MethodSummary {
    let mut s = MethodSummary {
        method,
        successes: 0,
        invalid: 0,
        failures: 0,
        mean_f1: None,
        mean_f2: None,
        mean_f3: None,
        mean_categorical_changes: None,
        mean_continuous_changes: None,
    };
    let mut sums = [0.0; 5];
    for r in records.iter().filter(|r| r.method == method) {
        match &r.outcome {
            Outcome::Success(c) => {
                s.successes += 1;
                sums[0] += c.f1;
                sums[1] += c.f2;
                sums[2] += c.f3;
                sums[3] += c.categorical_changes as f64;
                sums[4] += c.continuous_changes as f64;
            }
            Outcome::Invalid(_) => s.invalid += 1,
            Outcome::Failure { .. } => s.failures += 1,
        }
    }
    if s.successes > 0 {
        let n = s.successes as f64;
        s.mean_f1 = Some(sums[0] / n);
        s.mean_f2 = Some(sums[1] / n);
        s.mean_f3 = Some(sums[2] / n);
        s.mean_categorical_changes = Some(sums[3] / n);
        s.mean_continuous_changes = Some(sums[4] / n);
    }
    s
}
