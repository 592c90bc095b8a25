use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::{DatasetError, FeatureSchema};
use crate::linalg::Matrix;

/// Binary class label, `+1` or `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn opposite(self) -> Label {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }

    /// Sign of a decision value; zero maps to `Positive`.
    pub fn from_decision(value: f64) -> Label {
        if value >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Positive => f.write_str("+1"),
            Label::Negative => f.write_str("-1"),
        }
    }
}

/// Rows of feature values with labels, validated against a schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: FeatureSchema,
    rows: Matrix,
    labels: Vec<Label>,
}

impl Dataset {
    pub fn new(schema: FeatureSchema, rows: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self, DatasetError> {
        if rows.is_empty() {
            return Err(DatasetError::Empty);
        }
        if rows.len() != labels.len() {
            return Err(DatasetError::LabelCount { rows: rows.len(), labels: labels.len() });
        }
        let n = schema.len();
        let mut m = Matrix::zeros(0, n);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(DatasetError::RowLength { row: r, expected: n, found: row.len() });
            }
            validate_row(&schema, r, row)?;
            m.push_row(row);
        }
        Ok(Dataset { schema, rows: m, labels })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.schema.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.rows.row(i)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.rows.rows_iter()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.rows
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn count_label(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Column means over all rows.
    pub fn feature_means(&self) -> Vec<f64> {
        let n = self.n_features();
        let mut mean = vec![0.0; n];
        for row in self.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        let count = self.len() as f64;
        mean.iter_mut().for_each(|m| *m /= count);
        mean
    }

    /// Same rows and labels under a schema with identical feature layout but
    /// different weights or flags.
    pub fn with_schema(&self, schema: FeatureSchema) -> Result<Self, DatasetError> {
        let rows = self.rows().map(|r| r.to_vec()).collect();
        Dataset::new(schema, rows, self.labels.clone())
    }
}

/// Checks a single row against schema bounds and one-hot group constraints.
pub(crate) fn validate_row(schema: &FeatureSchema, r: usize, row: &[f64]) -> Result<(), DatasetError> {
    for (f, &v) in schema.features().iter().zip(row) {
        if !v.is_finite() {
            return Err(DatasetError::NonFinite { row: r, feature: f.name.clone() });
        }
        if f.is_continuous() && (v < f.lower || v > f.upper) {
            return Err(DatasetError::OutOfBounds {
                row: r,
                feature: f.name.clone(),
                value: v,
                lower: f.lower,
                upper: f.upper,
            });
        }
    }
    for g in schema.groups() {
        let binary = g.members.iter().all(|&s| row[s] == 0.0 || row[s] == 1.0);
        let sum: f64 = g.members.iter().map(|&s| row[s]).sum();
        if !binary || sum != 1.0 {
            return Err(DatasetError::GroupConstraint { row: r, group: g.id.to_string() });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureSpec;

    fn schema() -> FeatureSchema {
        FeatureSchema::new(vec![
            FeatureSpec::continuous("glucose").with_bounds(0.0, 300.0),
            FeatureSpec::one_hot("a", "g"),
            FeatureSpec::one_hot("b", "g"),
        ])
        .unwrap()
    }

    #[test]
    fn accepts_valid_rows() {
        let d = Dataset::new(
            schema(),
            vec![vec![120.0, 1.0, 0.0], vec![90.0, 0.0, 1.0]],
            vec![Label::Positive, Label::Negative],
        )
        .unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.n_features(), 3);
        assert_eq!(d.feature_means(), vec![105.0, 0.5, 0.5]);
    }

    #[test]
    fn group_sum_violation_is_reported() {
        let err = Dataset::new(schema(), vec![vec![1.0, 1.0, 1.0]], vec![Label::Positive]).unwrap_err();
        assert_eq!(err, DatasetError::GroupConstraint { row: 0, group: "g".into() });
    }

    #[test]
    fn out_of_bounds_and_empty() {
        let err = Dataset::new(schema(), vec![vec![400.0, 1.0, 0.0]], vec![Label::Positive]).unwrap_err();
        assert!(matches!(err, DatasetError::OutOfBounds { row: 0, .. }));
        assert_eq!(Dataset::new(schema(), vec![], vec![]).unwrap_err(), DatasetError::Empty);
    }

    #[test]
    fn zero_decision_is_positive() {
        assert_eq!(Label::from_decision(0.0), Label::Positive);
        assert_eq!(Label::from_decision(-0.5), Label::Negative);
        assert_eq!(Label::Positive.opposite(), Label::Negative);
    }
}
