use alloc::vec;
use alloc::vec::Vec;

use super::{Dataset, DatasetError};
use crate::linalg::{Matrix, SymmetricEigen};
use crate::math::sqrt;

/// Sample covariance of the continuous features, shifted by `shrinkage * I`,
/// together with its symmetric inverse square root.
///
/// One-hot indicators are not part of the estimate; [`Self::inv_sqrt_full`]
/// acts as the identity on them.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    n_features: usize,
    continuous: Vec<usize>,
    mean: Vec<f64>,
    shifted: Matrix,
    shrinkage: f64,
    inv_sqrt: Matrix,
    min_eigenvalue: f64,
}

/// `1e-6 * trace(cov) / n` for the continuous block of `data`.
pub fn default_shrinkage(data: &Dataset) -> f64 {
    let continuous = data.schema().continuous_indices();
    if continuous.is_empty() || data.len() < 2 {
        return 0.0;
    }
    let (_, cov) = sample_covariance(data, &continuous);
    let trace: f64 = (0..continuous.len()).map(|i| cov[(i, i)]).sum();
    1e-6 * trace / continuous.len() as f64
}

fn sample_covariance(data: &Dataset, continuous: &[usize]) -> (Vec<f64>, Matrix) {
    let k = continuous.len();
    let n = data.len() as f64;
    let mut mean = vec![0.0; k];
    for row in data.rows() {
        for (m, &j) in mean.iter_mut().zip(continuous) {
            *m += row[j];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut cov = Matrix::zeros(k, k);
    let mut centered = vec![0.0; k];
    for row in data.rows() {
        for (c, (&j, m)) in centered.iter_mut().zip(continuous.iter().zip(&mean)) {
            *c = row[j] - m;
        }
        for a in 0..k {
            for b in 0..=a {
                cov[(a, b)] += centered[a] * centered[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..=a {
            let v = cov[(a, b)] / (n - 1.0);
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    (mean, cov)
}

impl CovarianceModel {
    /// Unbiased covariance (divide by `N - 1`) plus `shrinkage * I`.
    pub fn fit(data: &Dataset, shrinkage: f64) -> Result<Self, DatasetError> {
        if !(shrinkage >= 0.0 && shrinkage.is_finite()) {
            return Err(DatasetError::InvalidShrinkage);
        }
        if data.len() < 2 {
            return Err(DatasetError::TooFewRows);
        }
        let continuous = data.schema().continuous_indices();
        let (mean, mut shifted) = sample_covariance(data, &continuous);
        for i in 0..continuous.len() {
            shifted[(i, i)] += shrinkage;
        }
        let eig = SymmetricEigen::new(&shifted).ok_or(DatasetError::Eigen)?;
        let min_eigenvalue = eig.values.first().copied().unwrap_or(1.0);
        let top = eig.values.last().copied().unwrap_or(1.0).abs().max(f64::MIN_POSITIVE);
        if !(min_eigenvalue > 1e-12 * top) {
            return Err(DatasetError::NotPositiveDefinite(min_eigenvalue));
        }
        let inv_sqrt = eig.map_spectrum(|l| 1.0 / sqrt(l));
        Ok(CovarianceModel {
            n_features: data.n_features(),
            continuous,
            mean,
            shifted,
            shrinkage,
            inv_sqrt,
            min_eigenvalue,
        })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Feature indices covered by the estimate, in order.
    pub fn continuous(&self) -> &[usize] {
        &self.continuous
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn shrinkage(&self) -> f64 {
        self.shrinkage
    }

    /// `cov + shrinkage * I` over the continuous block.
    pub fn shifted(&self) -> &Matrix {
        &self.shifted
    }

    /// `(cov + shrinkage * I)^(-1/2)` over the continuous block.
    pub fn inv_sqrt(&self) -> &Matrix {
        &self.inv_sqrt
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    /// Per-feature standard deviations (from the shifted diagonal) of the
    /// continuous block.
    pub fn std_devs(&self) -> Vec<f64> {
        (0..self.continuous.len()).map(|i| sqrt(self.shifted[(i, i)])).collect()
    }

    /// Embeds the inverse square root into an `n x n` matrix with identity
    /// on the one-hot coordinates.
    pub fn inv_sqrt_full(&self) -> Matrix {
        let mut m = Matrix::identity(self.n_features);
        for (a, &i) in self.continuous.iter().enumerate() {
            for (b, &j) in self.continuous.iter().enumerate() {
                m[(i, j)] = self.inv_sqrt[(a, b)];
            }
        }
        m
    }

    /// `(cov + shrinkage * I) v` on the continuous coordinates; the rest of
    /// `v` is copied through.
    pub fn apply_shifted(&self, v: &[f64]) -> Result<Vec<f64>, DatasetError> {
        if v.len() != self.n_features {
            return Err(DatasetError::Dimension { expected: self.n_features, found: v.len() });
        }
        let mut out = v.to_vec();
        let sub: Vec<f64> = self.continuous.iter().map(|&j| v[j]).collect();
        let prod = self.shifted.mul_vec(&sub);
        for (&j, p) in self.continuous.iter().zip(prod) {
            out[j] = p;
        }
        Ok(out)
    }
}
