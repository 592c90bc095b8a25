use alloc::vec;
use alloc::vec::Vec;

use super::{Dataset, DatasetError, Label};

/// Class centroids. One-hot coordinates hold category frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassPrototypes {
    pub positive: Vec<f64>,
    pub negative: Vec<f64>,
}

impl ClassPrototypes {
    pub fn fit(data: &Dataset) -> Result<Self, DatasetError> {
        Ok(ClassPrototypes {
            positive: class_prototype(data, Label::Positive)?,
            negative: class_prototype(data, Label::Negative)?,
        })
    }

    pub fn get(&self, label: Label) -> &[f64] {
        match label {
            Label::Positive => &self.positive,
            Label::Negative => &self.negative,
        }
    }
}

/// Coordinate-wise mean of the rows carrying `label`.
pub fn class_prototype(data: &Dataset, label: Label) -> Result<Vec<f64>, DatasetError> {
    let mut sum = vec![0.0; data.n_features()];
    let mut count = 0usize;
    for (row, _) in data.rows().zip(data.labels()).filter(|(_, &l)| l == label) {
        count += 1;
        for (s, v) in sum.iter_mut().zip(row) {
            *s += v;
        }
    }
    if count == 0 {
        return Err(DatasetError::MissingLabel(label));
    }
    sum.iter_mut().for_each(|s| *s /= count as f64);
    Ok(sum)
}
