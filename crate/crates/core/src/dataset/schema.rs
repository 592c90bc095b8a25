use alloc::string::String;
use alloc::vec::Vec;

use super::DatasetError;

/// How a feature is encoded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureKind {
    Continuous,
    /// Member of a one-hot encoded categorical feature.
    OneHot {
        group: String,
    },
}

/// Description of one input column.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    pub lower: f64,
    pub upper: f64,
    /// Penalty on changing this feature. `f64::INFINITY` freezes it.
    pub weight: f64,
    /// Sensitive attribute. Audits never freeze protected features.
    pub protected: bool,
}

impl FeatureSpec {
    pub fn continuous(name: impl Into<String>) -> Self {
        FeatureSpec {
            name: name.into(),
            kind: FeatureKind::Continuous,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            weight: 1.0,
            protected: false,
        }
    }

    pub fn one_hot(name: impl Into<String>, group: impl Into<String>) -> Self {
        FeatureSpec {
            name: name.into(),
            kind: FeatureKind::OneHot { group: group.into() },
            lower: 0.0,
            upper: 1.0,
            weight: 1.0,
            protected: false,
        }
    }

    pub fn with_bounds(mut self, lower: f64, upper: f64) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn frozen(self) -> Self {
        self.with_weight(f64::INFINITY)
    }

    pub fn protected(mut self) -> Self {
        self.protected = true;
        self
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self.kind, FeatureKind::Continuous)
    }

    pub fn is_frozen(&self) -> bool {
        self.weight == f64::INFINITY
    }
}

/// Index set of the binary indicators of one categorical feature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneHotGroup {
    pub id: String,
    pub members: Vec<usize>,
}

/// Ordered feature descriptors plus the partition of one-hot indicators into
/// groups. Construction validates every invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSchema {
    features: Vec<FeatureSpec>,
    groups: Vec<OneHotGroup>,
    group_of: Vec<Option<usize>>,
}

impl FeatureSchema {
    pub fn new(features: Vec<FeatureSpec>) -> Result<Self, DatasetError> {
        if features.is_empty() {
            return Err(DatasetError::EmptySchema);
        }
        let mut groups: Vec<OneHotGroup> = Vec::new();
        let mut group_of = Vec::with_capacity(features.len());
        for (i, f) in features.iter().enumerate() {
            if features[..i].iter().any(|g| g.name == f.name) {
                return Err(DatasetError::DuplicateFeature(f.name.clone()));
            }
            if !(f.weight > 0.0) {
                return Err(DatasetError::InvalidWeight { name: f.name.clone(), weight: f.weight });
            }
            if f.lower.is_nan() || f.upper.is_nan() || f.lower >= f.upper {
                return Err(DatasetError::InvalidBounds { name: f.name.clone(), lower: f.lower, upper: f.upper });
            }
            match &f.kind {
                FeatureKind::Continuous => group_of.push(None),
                FeatureKind::OneHot { group } => {
                    let g = match groups.iter().position(|g| &g.id == group) {
                        Some(g) => g,
                        None => {
                            groups.push(OneHotGroup { id: group.clone(), members: Vec::new() });
                            groups.len() - 1
                        }
                    };
                    groups[g].members.push(i);
                    group_of.push(Some(g));
                }
            }
        }
        if let Some(g) = groups.iter().find(|g| g.members.len() < 2) {
            return Err(DatasetError::GroupTooSmall { group: g.id.clone(), members: g.members.len() });
        }
        Ok(FeatureSchema { features, groups, group_of })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn feature(&self, i: usize) -> &FeatureSpec {
        &self.features[i]
    }

    pub fn groups(&self) -> &[OneHotGroup] {
        &self.groups
    }

    pub fn group_of(&self, i: usize) -> Option<usize> {
        self.group_of[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    pub fn continuous_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.features[i].is_continuous()).collect()
    }

    pub fn is_continuous(&self, i: usize) -> bool {
        self.features[i].is_continuous()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.features.iter().map(|f| f.weight).collect()
    }

    /// Copy of the schema with new weights (validated like the original).
    pub fn with_weights(&self, weights: &[f64]) -> Result<Self, DatasetError> {
        if weights.len() != self.len() {
            return Err(DatasetError::Dimension { expected: self.len(), found: weights.len() });
        }
        let features = self.features.iter().zip(weights).map(|(f, &w)| f.clone().with_weight(w)).collect();
        FeatureSchema::new(features)
    }
}
