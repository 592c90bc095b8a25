use alloc::string::String;
use alloc::vec::Vec;

use super::{Dataset, DatasetError};

/// Percentile knots of one continuous feature: distinct sorted sample values
/// and the plotting position assigned to each.
#[derive(Debug, Clone, PartialEq)]
struct Knots {
    values: Vec<f64>,
    positions: Vec<f64>,
}

/// Per-feature empirical percentile functions.
///
/// The `j`-th order statistic of `N` samples sits at the Hazen position
/// `(j - 0.5) / N`; tied samples share the midpoint of their positions.
/// Between knots the function is linear, and outside the sample range it is
/// clamped to `[0.5 / N, 1 - 0.5 / N]`, so it never reaches 0 or 1.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    n_samples: usize,
    names: Vec<String>,
    features: Vec<Option<Knots>>,
}

impl EmpiricalDistribution {
    /// Builds percentile functions for every continuous feature of `data`.
    pub fn fit(data: &Dataset) -> Self {
        let schema = data.schema();
        let n = data.len();
        let features = (0..schema.len())
            .map(|j| {
                if !schema.is_continuous(j) {
                    return None;
                }
                let mut col: Vec<f64> = data.rows().map(|r| r[j]).collect();
                col.sort_by(f64::total_cmp);
                Some(knots(&col))
            })
            .collect();
        EmpiricalDistribution { n_samples: n, names: schema.names().map(String::from).collect(), features }
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    /// Lower clamp `0.5 / N`; the upper clamp is `1 - floor()`.
    pub fn floor(&self) -> f64 {
        0.5 / self.n_samples as f64
    }

    pub fn is_continuous(&self, feature: usize) -> bool {
        self.features.get(feature).is_some_and(Option::is_some)
    }

    pub fn continuous_features(&self) -> Vec<usize> {
        (0..self.features.len()).filter(|&j| self.is_continuous(j)).collect()
    }

    /// Percentile `Q_feature(value)`.
    pub fn percentile(&self, feature: usize, value: f64) -> Result<f64, DatasetError> {
        let knots = self
            .features
            .get(feature)
            .ok_or(DatasetError::FeatureIndex(feature))?
            .as_ref()
            .ok_or_else(|| DatasetError::NotContinuous(self.names[feature].clone()))?;
        Ok(self.eval(knots, value))
    }

    fn eval(&self, k: &Knots, value: f64) -> f64 {
        let floor = self.floor();
        let vals = &k.values;
        let first = vals[0];
        let last = vals[vals.len() - 1];
        if value < first {
            return floor;
        }
        if value > last {
            return 1.0 - floor;
        }
        // first index with vals[i] >= value
        let i = vals.partition_point(|&v| v < value);
        if vals[i] == value {
            return k.positions[i];
        }
        let (a, b) = (vals[i - 1], vals[i]);
        let (pa, pb) = (k.positions[i - 1], k.positions[i]);
        pa + (value - a) / (b - a) * (pb - pa)
    }
}

fn knots(sorted: &[f64]) -> Knots {
    let n2 = 2.0 * sorted.len() as f64;
    let mut values = Vec::new();
    let mut positions = Vec::new();
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start + 1;
        while end < sorted.len() && sorted[end] == sorted[start] {
            end += 1;
        }
        // 1-based ranks start+1 ..= end share the midpoint of their positions
        values.push(sorted[start]);
        positions.push((start + end) as f64 / n2);
        start = end;
    }
    Knots { values, positions }
}
