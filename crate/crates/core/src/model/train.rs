// Primal-dual interior point on the soft-margin primal
//
//   min 1/2 ||w||^2 + C 1^T xi   s.t. y_i (<w, x_i> + b) + xi_i >= 1, xi >= 0
//
// with Mehrotra predictor-corrector steps. The Newton system is reduced to the
// (n + 1) x (n + 1) normal equations in (w, b), so an iteration costs one pass
// over the rows and the count does not depend on feature scaling.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{LinearSvm, ModelError};
use crate::dataset::{Dataset, Label};
use crate::linalg::{solve_spd, Matrix};
use crate::math::{dot, norm_inf};

const STEP_FRACTION: f64 = 0.995;
const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Hinge-loss penalty `C`.
    pub c: f64,
    /// Iteration cap; each iteration is one pass over the rows.
    pub max_epochs: usize,
    /// Stop when the duality gap relative to `1 + |objective|` falls below this.
    pub tolerance: f64,
    /// Orders rows before accumulation.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { c: 1.0, max_epochs: 200, tolerance: 1e-9, seed: 0 }
    }
}

/// `1/2 ||w||^2 + C sum_i max(0, 1 - y_i (<w, x_i> + b))`.
pub fn primal_objective(weights: &[f64], intercept: f64, data: &Dataset, c: f64) -> f64 {
    let hinge: f64 =
        data.rows().zip(data.labels()).map(|(x, y)| (1.0 - y.sign() * (dot(weights, x) + intercept)).max(0.0)).sum();
    0.5 * dot(weights, weights) + c * hinge
}

/// Raw soft-margin solution, before canonical rescaling.
pub(crate) struct RawSolution {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

// Largest step in (0, 1] keeping `v + t dv` positive, scaled back from the boundary.
fn max_step(v: &[f64], dv: &[f64]) -> f64 {
    let mut t: f64 = 1.0;
    for (a, d) in v.iter().zip(dv) {
        if *d < 0.0 {
            t = t.min(-a / d);
        }
    }
    t
}

pub(crate) fn solve_primal(data: &Dataset, cfg: &TrainConfig) -> Result<RawSolution, ModelError> {
    if !(cfg.c > 0.0 && cfg.c.is_finite()) {
        return Err(ModelError::InvalidConfig("C must be positive".into()));
    }
    if !(cfg.tolerance > 0.0) {
        return Err(ModelError::InvalidConfig("tolerance must be positive".into()));
    }
    let rows = data.len();
    if rows < 2 {
        return Err(ModelError::TooFewRows);
    }
    if data.count_label(Label::Positive) == 0 || data.count_label(Label::Negative) == 0 {
        return Err(ModelError::SingleClass);
    }
    let n = data.n_features();
    let c = cfg.c;
    let mut order: Vec<usize> = (0..rows).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));

    // Centering is exact (the intercept absorbs <w, mean>) and keeps the
    // normal equations well scaled for features far from the origin.
    let mut mean = vec![0.0; n];
    for row in data.rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v / rows as f64;
        }
    }
    // a_i = y_i (x_i - mean, 1)
    let a: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| {
            let y = data.label(i).sign();
            let mut r: Vec<f64> = data.row(i).iter().zip(&mean).map(|(v, m)| y * (v - m)).collect();
            r.push(y);
            r
        })
        .collect();
    let dim = n + 1;
    let scale = 1.0 + a.iter().map(|r| norm_inf(r)).fold(0.0, f64::max);

    let mut z = vec![0.0; dim];
    let mut xi = vec![1.0; rows];
    let mut s = vec![1.0; rows];
    let mut lam = vec![0.5 * c; rows];
    let mut mu = vec![0.5 * c; rows];
    let mut gap = f64::INFINITY;

    for _ in 0..cfg.max_epochs.max(1) {
        let az: Vec<f64> = a.iter().map(|r| dot(r, &z)).collect();
        // residuals
        let mut r_d = z.clone();
        r_d[n] = 0.0;
        for (r, l) in a.iter().zip(&lam) {
            for k in 0..dim {
                r_d[k] -= l * r[k];
            }
        }
        let r_c: Vec<f64> = lam.iter().zip(&mu).map(|(l, m)| c - l - m).collect();
        let r_p: Vec<f64> = (0..rows).map(|i| az[i] + xi[i] - 1.0 - s[i]).collect();
        let comp = dot(&s, &lam) + dot(&xi, &mu);
        let w = &z[..n];
        let hinge: f64 = az.iter().map(|v| (1.0 - v).max(0.0)).sum();
        let objective = 0.5 * dot(w, w) + c * hinge;
        gap = comp / (1.0 + objective.abs());
        let primal_ok = norm_inf(&r_p) <= FEASIBILITY_TOL * scale;
        let dual_ok = norm_inf(&r_d) <= FEASIBILITY_TOL * scale * (1.0 + c) && norm_inf(&r_c) <= FEASIBILITY_TOL * c;
        if gap <= cfg.tolerance && primal_ok && dual_ok {
            let intercept = z[n] - dot(w, &mean);
            return Ok(RawSolution { weights: w.to_vec(), intercept });
        }

        // normal matrix (H + A^T D^-1 A), D = xi/mu + s/lam
        let d_inv: Vec<f64> = (0..rows).map(|i| 1.0 / (xi[i] / mu[i] + s[i] / lam[i])).collect();
        let mut normal = Matrix::zeros(dim, dim);
        for k in 0..n {
            normal[(k, k)] = 1.0;
        }
        for (r, di) in a.iter().zip(&d_inv) {
            for p in 0..dim {
                let f = di * r[p];
                for q in p..dim {
                    normal[(p, q)] += f * r[q];
                }
            }
        }
        for p in 0..dim {
            for q in 0..p {
                normal[(p, q)] = normal[(q, p)];
            }
        }

        // Solves for (dz, dxi, ds, dlam, dmu) given complementarity targets.
        let direction = |r_sl: &[f64], r_xm: &[f64]| -> Option<[Vec<f64>; 5]> {
            let g: Vec<f64> =
                (0..rows).map(|i| -r_p[i] + xi[i] / mu[i] * r_c[i] + r_xm[i] / mu[i] - r_sl[i] / lam[i]).collect();
            let mut rhs: Vec<f64> = r_d.iter().map(|v| -v).collect();
            for i in 0..rows {
                for k in 0..dim {
                    rhs[k] += a[i][k] * d_inv[i] * g[i];
                }
            }
            let dz = solve_spd(&normal, &rhs)?;
            let dlam: Vec<f64> = (0..rows).map(|i| d_inv[i] * (g[i] - dot(&a[i], &dz))).collect();
            let dxi: Vec<f64> = (0..rows).map(|i| xi[i] / mu[i] * (dlam[i] - r_c[i]) - r_xm[i] / mu[i]).collect();
            let ds: Vec<f64> = (0..rows).map(|i| -(r_sl[i] + s[i] * dlam[i]) / lam[i]).collect();
            let dmu: Vec<f64> = (0..rows).map(|i| -(r_xm[i] + mu[i] * dxi[i]) / xi[i]).collect();
            Some([dz, dxi, ds, dlam, dmu])
        };
        let step = |d: &[Vec<f64>; 5]| {
            max_step(&xi, &d[1]).min(max_step(&s, &d[2])).min(max_step(&lam, &d[3])).min(max_step(&mu, &d[4]))
        };

        let r_sl: Vec<f64> = s.iter().zip(&lam).map(|(a, b)| a * b).collect();
        let r_xm: Vec<f64> = xi.iter().zip(&mu).map(|(a, b)| a * b).collect();
        let Some(aff) = direction(&r_sl, &r_xm) else { break };
        let t_aff = step(&aff);
        let mut comp_aff = 0.0;
        for i in 0..rows {
            comp_aff += (s[i] + t_aff * aff[2][i]) * (lam[i] + t_aff * aff[3][i]);
            comp_aff += (xi[i] + t_aff * aff[1][i]) * (mu[i] + t_aff * aff[4][i]);
        }
        let tau = comp / (2 * rows) as f64;
        let sigma = (comp_aff / comp).powi(3);
        let r_sl: Vec<f64> = (0..rows).map(|i| r_sl[i] + aff[2][i] * aff[3][i] - sigma * tau).collect();
        let r_xm: Vec<f64> = (0..rows).map(|i| r_xm[i] + aff[1][i] * aff[4][i] - sigma * tau).collect();
        let Some(d) = direction(&r_sl, &r_xm) else { break };
        let t = (STEP_FRACTION * step(&d)).min(1.0);
        for k in 0..dim {
            z[k] += t * d[0][k];
        }
        for i in 0..rows {
            xi[i] += t * d[1][i];
            s[i] += t * d[2][i];
            lam[i] += t * d[3][i];
            mu[i] += t * d[4][i];
        }
    }
    Err(ModelError::NotConverged { iterations: cfg.max_epochs, gap })
}

/// Trains a soft-margin linear SVM and rescales it so the training row
/// closest to the hyperplane has `|<w, x> + b| = 1`.
pub fn train_svm(data: &Dataset, cfg: &TrainConfig) -> Result<LinearSvm, ModelError> {
    let raw = solve_primal(data, cfg)?;
    let names = data.schema().names().map(alloc::string::String::from).collect();
    LinearSvm::new(raw.weights, raw.intercept, names)?.canonicalize(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{FeatureSchema, FeatureSpec};
    use rand::Rng;

    fn dataset(rows: Vec<Vec<f64>>, labels: Vec<Label>) -> Dataset {
        let n = rows[0].len();
        let schema =
            FeatureSchema::new((0..n).map(|i| FeatureSpec::continuous(alloc::format!("f{i}"))).collect()).unwrap();
        Dataset::new(schema, rows, labels).unwrap()
    }

    #[test]
    fn symmetric_pair_gives_unit_weight() {
        let d = dataset(vec![vec![-1.0], vec![1.0]], vec![Label::Negative, Label::Positive]);
        let cfg = TrainConfig { c: 1e6, ..TrainConfig::default() };
        let raw = solve_primal(&d, &cfg).unwrap();
        assert!((raw.weights[0] - 1.0).abs() < 1e-7, "w = {:?}", raw.weights);
        assert!(raw.intercept.abs() < 1e-7);
        let m = train_svm(&d, &cfg).unwrap();
        assert_eq!(m.support_vectors(&d, 1e-6).unwrap().len(), 2);
    }

    #[test]
    fn single_class_rejected() {
        let d = dataset(vec![vec![0.0], vec![1.0]], vec![Label::Positive, Label::Positive]);
        assert_eq!(train_svm(&d, &TrainConfig::default()).unwrap_err(), ModelError::SingleClass);
    }

    #[test]
    fn local_optimality_against_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..80 {
            let pos = rng.random_bool(0.5);
            let shift = if pos { 1.0 } else { -1.0 };
            rows.push(vec![rng.random_range(-1.5..1.5) + shift, rng.random_range(-1.5..1.5) - 0.5 * shift]);
            labels.push(if pos { Label::Positive } else { Label::Negative });
        }
        let d = dataset(rows, labels);
        let cfg = TrainConfig { c: 0.7, ..TrainConfig::default() };
        let raw = solve_primal(&d, &cfg).unwrap();
        let base = primal_objective(&raw.weights, raw.intercept, &d, cfg.c);
        let scale = (dot(&raw.weights, &raw.weights) + raw.intercept * raw.intercept).sqrt();
        for _ in 0..1000 {
            let dw: Vec<f64> = raw.weights.iter().map(|_| rng.random_range(-1.0..1.0) * 1e-2 * scale).collect();
            let db = rng.random_range(-1.0..1.0) * 1e-2 * scale;
            let w: Vec<f64> = raw.weights.iter().zip(&dw).map(|(a, b)| a + b).collect();
            let perturbed = primal_objective(&w, raw.intercept + db, &d, cfg.c);
            assert!(base <= perturbed + 1e-9, "{base} > {perturbed}");
        }
    }
}
