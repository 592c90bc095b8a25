//! Cohort-level view of what the model asks people to change.
//!
//! Every row predicted with the undesirable label is explained. The
//! suggested actions are then averaged: mean delta for continuous features,
//! and the signed share of the cohort switching into each category. Protected
//! features are never frozen here, because seeing whether the model asks
//! people to "change" them is the point of the audit. A closed-form linear
//! attribution table is reported alongside.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::counterfactual::{Counterfactual, CounterfactualQuery, ExplainError, Explainer, Variant};
use crate::dataset::{Dataset, FeatureSchema, Label};
use crate::math::dot;
use crate::model::{LinearSvm, ModelError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AuditError {
    #[error("empty cohort: no row is predicted {0}")]
    EmptyCohort(Label),
    #[error("no successful counterfactuals to aggregate")]
    NoSuccesses,
    #[error(transparent)]
    Explain(#[from] ExplainError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Schema weights with protected features thawed (infinite weight becomes
/// 1). Returns the weights and the names of the thawed features.
pub fn audit_weights(schema: &FeatureSchema) -> (Vec<f64>, Vec<String>) {
    let mut thawed = Vec::new();
    let weights = schema
        .features()
        .iter()
        .map(|f| {
            if f.protected && f.is_frozen() {
                thawed.push(f.name.clone());
                1.0
            } else {
                f.weight
            }
        })
        .collect();
    (weights, thawed)
}

/// Outcome for one cohort member.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortEntry {
    pub row: usize,
    pub result: Result<Counterfactual, ExplainError>,
}

/// Explains every row of `data` predicted as `target.opposite()`, asking
/// for `target`. `template` supplies variant, weights and epsilon; its `x`
/// and `target` are overwritten. Failures are recorded per row.
pub fn cohort_explain(
    ex: &Explainer<'_>,
    data: &Dataset,
    target: Label,
    template: &CounterfactualQuery,
) -> Result<Vec<CohortEntry>, AuditError> {
    let mut out = Vec::new();
    for (row, x) in data.rows().enumerate() {
        if ex.model().predict(x)? != target.opposite() {
            continue;
        }
        let mut q = template.clone();
        q.x = x.to_vec();
        q.target = Some(target);
        out.push(CohortEntry { row, result: ex.explain(&q) });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousChange {
    pub index: usize,
    pub name: String,
    pub mean_delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryChange {
    pub index: usize,
    pub group: String,
    pub name: String,
    pub switched_in: usize,
    pub switched_out: usize,
    /// `100 * (switched_in - switched_out) / successes`.
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attribution {
    pub index: usize,
    pub name: String,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub target: Label,
    pub variant: Variant,
    pub cohort_size: usize,
    pub successes: usize,
    /// Rows whose explanation failed or missed the margin.
    pub failed_rows: Vec<usize>,
    /// Protected features whose freeze was lifted for the audit.
    pub thawed: Vec<String>,
    pub continuous: Vec<ContinuousChange>,
    pub categorical: Vec<CategoryChange>,
    /// Mean linear attribution over the whole cohort.
    pub attribution: Vec<Attribution>,
}

impl AuditReport {
    /// Sum of signed percentages within `group`.
    pub fn group_total(&self, group: &str) -> f64 {
        self.categorical.iter().filter(|c| c.group == group).map(|c| c.percent).sum()
    }

    pub fn category(&self, name: &str) -> Option<&CategoryChange> {
        self.categorical.iter().find(|c| c.name == name)
    }
}

/// Mean continuous deltas and signed category switch rates of `cfs`.
///
/// Returns `(continuous, categorical)`; fails when `cfs` is empty.
pub fn aggregate_changes(
    cfs: &[&Counterfactual],
    schema: &FeatureSchema,
) -> Result<(Vec<ContinuousChange>, Vec<CategoryChange>), AuditError> {
    if cfs.is_empty() {
        return Err(AuditError::NoSuccesses);
    }
    let n = cfs.len() as f64;
    let mut continuous = Vec::new();
    let mut categorical = Vec::new();
    for (index, f) in schema.features().iter().enumerate() {
        if f.is_continuous() {
            let sum: f64 = cfs.iter().map(|cf| cf.delta[index]).sum();
            continuous.push(ContinuousChange { index, name: f.name.clone(), mean_delta: sum / n });
        }
    }
    for g in schema.groups() {
        for &index in &g.members {
            let switched_in = cfs.iter().filter(|cf| cf.x[index] == 0.0 && cf.x_prime[index] == 1.0).count();
            let switched_out = cfs.iter().filter(|cf| cf.x[index] == 1.0 && cf.x_prime[index] == 0.0).count();
            categorical.push(CategoryChange {
                index,
                group: g.id.clone(),
                name: schema.feature(index).name.clone(),
                switched_in,
                switched_out,
                percent: 100.0 * (switched_in as f64 - switched_out as f64) / n,
            });
        }
    }
    Ok((continuous, categorical))
}

/// Shapley values of a linear model under feature independence with the
/// feature means of `data` as baseline: `phi_i = w_i (x_i - mu_i)`.
pub fn linear_attribution(model: &LinearSvm, data: &Dataset, x: &[f64]) -> Result<Vec<f64>, ModelError> {
    attribution_from_baseline(model, &data.feature_means(), x)
}

/// `phi_i = w_i (x_i - baseline_i)`; the values sum to
/// `decision(x) - decision(baseline)`.
pub fn attribution_from_baseline(model: &LinearSvm, baseline: &[f64], x: &[f64]) -> Result<Vec<f64>, ModelError> {
    let n = model.n_features();
    for v in [baseline, x] {
        if v.len() != n {
            return Err(ModelError::Dimension { expected: n, found: v.len() });
        }
    }
    Ok(model.weights().iter().zip(x).zip(baseline).map(|((w, a), m)| w * (a - m)).collect())
}

/// Runs the full audit: explain the cohort with `variant`, aggregate the
/// successful counterfactuals and average attributions.
pub fn audit(
    ex: &Explainer<'_>,
    data: &Dataset,
    target: Label,
    variant: Variant,
    template: &CounterfactualQuery,
) -> Result<AuditReport, AuditError> {
    let schema = ex.schema();
    let (weights, thawed) = audit_weights(schema);
    let mut q = template.clone();
    q.variant = variant;
    q.weights = Some(match q.weights.take() {
        Some(w) => w
            .iter()
            .enumerate()
            .map(|(i, &a)| if !a.is_finite() && i < schema.len() && schema.feature(i).protected { 1.0 } else { a })
            .collect(),
        None => weights,
    });
    q.frozen.retain(|&i| i >= schema.len() || !schema.feature(i).protected);
    let entries = cohort_explain(ex, data, target, &q)?;
    if entries.is_empty() {
        return Err(AuditError::EmptyCohort(target.opposite()));
    }
    let mut failed_rows = Vec::new();
    let mut ok = Vec::new();
    for e in &entries {
        match &e.result {
            Ok(cf) if cf.valid => ok.push(cf),
            _ => failed_rows.push(e.row),
        }
    }
    let (continuous, categorical) = aggregate_changes(&ok, schema)?;

    let means = data.feature_means();
    let mut sums = vec![0.0; schema.len()];
    for e in &entries {
        let phi = attribution_from_baseline(ex.model(), &means, data.row(e.row))?;
        sums.iter_mut().zip(phi).for_each(|(s, p)| *s += p);
    }
    let attribution = schema
        .features()
        .iter()
        .enumerate()
        .map(|(index, f)| Attribution { index, name: f.name.clone(), mean: sums[index] / entries.len() as f64 })
        .collect();

    Ok(AuditReport {
        target,
        variant,
        cohort_size: entries.len(),
        successes: ok.len(),
        failed_rows,
        thawed,
        continuous,
        categorical,
        attribution,
    })
}

/// `decision(x) - decision(baseline)` computed directly, for checking
/// attribution completeness.
pub fn decision_gap(model: &LinearSvm, baseline: &[f64], x: &[f64]) -> f64 {
    (dot(model.weights(), x) + model.intercept()) - (dot(model.weights(), baseline) + model.intercept())
}
