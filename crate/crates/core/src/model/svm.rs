use alloc::string::String;
use alloc::vec::Vec;

use super::ModelError;
use crate::dataset::{Dataset, FeatureSchema, Label};
use crate::math::{abs, dot, norm2};

/// Linear classifier `sign(<w, x> + b)`.
///
/// `gamma` is the scale the raw trained parameters were divided by so that
/// the closest training row has `|<w, x> + b| = 1`; it is 1 for models that
/// were never canonicalized.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    weights: Vec<f64>,
    intercept: f64,
    feature_names: Vec<String>,
    gamma: f64,
}

impl LinearSvm {
    pub fn new(weights: Vec<f64>, intercept: f64, feature_names: Vec<String>) -> Result<Self, ModelError> {
        Self::with_gamma(weights, intercept, feature_names, 1.0)
    }

    pub fn with_gamma(
        weights: Vec<f64>,
        intercept: f64,
        feature_names: Vec<String>,
        gamma: f64,
    ) -> Result<Self, ModelError> {
        if feature_names.len() != weights.len() {
            return Err(ModelError::Dimension { expected: weights.len(), found: feature_names.len() });
        }
        if weights.iter().any(|w| !w.is_finite()) || !intercept.is_finite() || norm2(&weights) == 0.0 {
            return Err(ModelError::ZeroWeights);
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(ModelError::InvalidConfig("gamma must be positive".into()));
        }
        Ok(LinearSvm { weights, intercept, feature_names, gamma })
    }

    /// Model with generated feature names `x0, x1, ...`.
    pub fn from_weights(weights: Vec<f64>, intercept: f64) -> Result<Self, ModelError> {
        let names = (0..weights.len()).map(|i| alloc::format!("x{i}")).collect();
        Self::new(weights, intercept, names)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_features(&self) -> usize {
        self.weights.len()
    }

    pub fn weight_norm(&self) -> f64 {
        norm2(&self.weights)
    }

    /// Geometric margin `1 / ||w||` of a canonical model.
    pub fn margin_width(&self) -> f64 {
        1.0 / self.weight_norm()
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), ModelError> {
        if x.len() != self.weights.len() {
            return Err(ModelError::Dimension { expected: self.weights.len(), found: x.len() });
        }
        Ok(())
    }

    /// `<w, x> + b`.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64, ModelError> {
        self.check_dim(x)?;
        Ok(dot(&self.weights, x) + self.intercept)
    }

    /// Sign of the decision value; exactly zero predicts `+1`.
    pub fn predict(&self, x: &[f64]) -> Result<Label, ModelError> {
        Ok(Label::from_decision(self.decision_value(x)?))
    }

    /// Rows on or inside the margin band of the trained parameters,
    /// `gamma |<w, x> + b| <= 1 + tol`, tagged with their data labels.
    ///
    /// Canonical scaling puts every training row at `|<w, x> + b| >= 1`, so
    /// the band is measured before rescaling; for `gamma = 1` the two agree.
    pub fn support_vectors(&self, data: &Dataset, tol: f64) -> Result<Vec<(usize, Label)>, ModelError> {
        if !(tol >= 0.0) {
            return Err(ModelError::NegativeTolerance);
        }
        let mut out = Vec::new();
        for (i, row) in data.rows().enumerate() {
            if self.gamma * abs(self.decision_value(row)?) <= 1.0 + tol {
                out.push((i, data.label(i)));
            }
        }
        Ok(out)
    }

    /// Smallest `|<w, x> + b|` over the rows of `data`.
    pub fn min_abs_decision(&self, data: &Dataset) -> Result<f64, ModelError> {
        let mut m = f64::INFINITY;
        for row in data.rows() {
            m = m.min(abs(self.decision_value(row)?));
        }
        Ok(m)
    }

    /// Rescales `(w, b)` so the closest row of `data` sits exactly on the
    /// margin. `gamma` records the accumulated scale.
    pub fn canonicalize(&self, data: &Dataset) -> Result<LinearSvm, ModelError> {
        let s = self.min_abs_decision(data)?;
        if !(s > 1e-12 * self.weight_norm().max(1.0)) {
            return Err(ModelError::DegenerateMargin);
        }
        Ok(LinearSvm {
            weights: self.weights.iter().map(|w| w / s).collect(),
            intercept: self.intercept / s,
            feature_names: self.feature_names.clone(),
            gamma: self.gamma * s,
        })
    }

    /// Multiplies `(w, b)` by `c > 0`; predictions are unchanged.
    pub fn scaled(&self, c: f64) -> Result<LinearSvm, ModelError> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(ModelError::InvalidConfig("scale must be positive".into()));
        }
        Ok(LinearSvm {
            weights: self.weights.iter().map(|w| w * c).collect(),
            intercept: self.intercept * c,
            feature_names: self.feature_names.clone(),
            gamma: self.gamma / c,
        })
    }

    /// Checks that the model's feature names match the schema, in order.
    pub fn check_schema(&self, schema: &FeatureSchema) -> Result<(), ModelError> {
        if schema.len() != self.n_features() {
            return Err(ModelError::Dimension { expected: self.n_features(), found: schema.len() });
        }
        for (a, b) in self.feature_names.iter().zip(schema.names()) {
            if a != b {
                return Err(ModelError::FeatureNames(alloc::format!("model has `{a}` where schema has `{b}`")));
            }
        }
        Ok(())
    }
}
