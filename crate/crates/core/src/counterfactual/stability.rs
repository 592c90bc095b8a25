use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::ExplainError;
use crate::dataset::FeatureSchema;
use crate::math::{abs, norm2, powf};
use crate::model::{LinearSvm, ModelError};

/// Distance from `x_prime` to the decision hyperplane, `|<w, x'> + b| / ||w||`.
///
/// Every point within this distance gets the same prediction. For a valid
/// counterfactual under a canonical model it is at least `1 / ||w||`.
pub fn stability_radius(model: &LinearSvm, x_prime: &[f64]) -> Result<f64, ModelError> {
    let norm = model.weight_norm();
    if !(norm > 0.0) {
        return Err(ModelError::ZeroWeights);
    }
    Ok(abs(model.decision_value(x_prime)?) / norm)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub radius: f64,
    pub trials: usize,
    /// Samples predicted with the same label as `x_prime`.
    pub retained: usize,
}

impl StabilityReport {
    /// `retained / trials`; 1 when no samples were drawn.
    pub fn fraction(&self) -> f64 {
        if self.trials == 0 {
            1.0
        } else {
            self.retained as f64 / self.trials as f64
        }
    }
}

/// Samples `trials` points uniformly from the ball of `radius` around
/// `x_prime` and counts how many keep its predicted label.
///
/// Only continuous coordinates are perturbed; one-hot indicators stay fixed.
pub fn verify_stability(
    model: &LinearSvm,
    schema: &FeatureSchema,
    x_prime: &[f64],
    radius: f64,
    trials: usize,
    seed: u64,
) -> Result<StabilityReport, ExplainError> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(ExplainError::InvalidRadius(radius));
    }
    if schema.len() != x_prime.len() {
        return Err(ExplainError::Dimension { expected: schema.len(), found: x_prime.len() });
    }
    let label = model.predict(x_prime)?;
    let continuous = schema.continuous_indices();
    let k = continuous.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = x_prime.to_vec();
    let mut retained = 0;
    for _ in 0..trials {
        if k > 0 && radius > 0.0 {
            let dir: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let len = norm2(&dir);
            let r = radius * powf(rng.random::<f64>(), 1.0 / k as f64);
            for (&i, d) in continuous.iter().zip(&dir) {
                v[i] = x_prime[i] + if len > 0.0 { r * d / len } else { 0.0 };
            }
        }
        if model.predict(&v)? == label {
            retained += 1;
        }
    }
    Ok(StabilityReport { radius, trials, retained })
}
