use alloc::vec::Vec;

use super::{Counterfactual, ExplainError, Method};
use crate::dataset::{CovarianceModel, Dataset, DatasetError, Label};
use crate::model::LinearSvm;

/// `x + (cov + shrinkage I) delta` on continuous coordinates, `x + delta`
/// on one-hot ones.
///
/// The result is not re-optimized and may miss the margin; callers should
/// [`Counterfactual::assess`] it.
pub fn post_hoc_correlation(x: &[f64], delta: &[f64], cov: &CovarianceModel) -> Result<Vec<f64>, DatasetError> {
    if x.len() != delta.len() {
        return Err(DatasetError::Dimension { expected: x.len(), found: delta.len() });
    }
    let moved = cov.apply_shifted(delta)?;
    Ok(x.iter().zip(moved).map(|(a, d)| a + d).collect())
}

/// Closest support vector (see [`LinearSvm::support_vectors`]) labelled
/// `target`, under `sum_i W_i (x_i - s_i)^2`.
///
/// Rows that differ from `x` on a frozen (infinite-weight) feature are out of
/// reach. Ties go to the lowest row index.
pub fn nearest_support_vector(
    model: &LinearSvm,
    data: &Dataset,
    x: &[f64],
    target: Label,
    weights: &[f64],
    tol: f64,
) -> Result<Counterfactual, ExplainError> {
    let n = data.n_features();
    if x.len() != n || weights.len() != n {
        return Err(ExplainError::Dimension { expected: n, found: if x.len() != n { x.len() } else { weights.len() } });
    }
    for (feature, &weight) in weights.iter().enumerate() {
        if !(weight > 0.0) {
            return Err(ExplainError::InvalidWeight { feature, weight });
        }
    }
    let candidates: Vec<usize> =
        model.support_vectors(data, tol)?.into_iter().filter(|&(_, l)| l == target).map(|(i, _)| i).collect();
    if candidates.is_empty() {
        return Err(ExplainError::NoSupportVectors(target));
    }
    let mut best: Option<(usize, f64)> = None;
    for i in candidates {
        let d = weighted_distance(x, data.row(i), weights);
        if d.is_finite() && best.map_or(true, |(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    let (row, dist) = best.ok_or(ExplainError::NoReachableSupportVector(target))?;
    Counterfactual::assess(model, data.schema(), Method::NearestSupportVector, x, data.row(row).to_vec(), target, dist)
}

fn weighted_distance(x: &[f64], s: &[f64], weights: &[f64]) -> f64 {
    let mut total = 0.0;
    for ((a, b), &w) in x.iter().zip(s).zip(weights) {
        let d = a - b;
        if d == 0.0 {
            continue;
        }
        if !w.is_finite() {
            return f64::INFINITY;
        }
        total += w * d * d;
    }
    total
}
