use alloc::vec;
use alloc::vec::Vec;

use super::{
    change_threshold, Counterfactual, CounterfactualQuery, ExplainError, Method, PlausibilityRadius, SolverStats,
    Statistics, Variant,
};
use crate::dataset::{validate_row, FeatureSchema, Label};
use crate::linalg::Matrix;
use crate::math::{abs, round};
use crate::model::LinearSvm;
use crate::optim::{solve_mip, MixedIntegerProgram, SolveStatus, SolverConfig};

/// An inequality row of the built program that is active at the solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binding {
    Margin,
    PrototypeLower { feature: usize },
    PrototypeUpper { feature: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Row {
    Margin,
    Lower(usize),
    Upper(usize),
    Deviation,
}

#[derive(Debug, Clone, PartialEq)]
enum Cost {
    /// `delta^T M delta`
    Quadratic(Matrix),
    /// `|G delta|_1`
    L1(Matrix),
}

impl Cost {
    fn eval(&self, delta: &[f64]) -> f64 {
        match self {
            Cost::Quadratic(m) => m.quad_form(delta),
            Cost::L1(g) => g.mul_vec(delta).iter().map(|v| abs(*v)).sum(),
        }
    }
}

/// A built program together with what is needed to map its solution back to
/// feature space.
///
/// Program variables are the non-frozen features in schema order, followed
/// (for sparse variants) by one deviation variable per cost row.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub program: MixedIntegerProgram,
    pub target: Label,
    x: Vec<f64>,
    free: Vec<usize>,
    rows: Vec<Row>,
    cost: Cost,
}

impl Problem {
    /// Feature indices backing the first program variables.
    pub fn free_features(&self) -> &[usize] {
        &self.free
    }

    /// Embeds program variables into a full feature vector: frozen features
    /// keep their original value, binaries are rounded and sub-threshold
    /// moves are dropped.
    pub fn lift(&self, schema: &FeatureSchema, z: &[f64]) -> Vec<f64> {
        let mut out = self.x.clone();
        for (j, &i) in self.free.iter().enumerate() {
            let f = schema.feature(i);
            out[i] = if !f.is_continuous() {
                round(z[j]).clamp(0.0, 1.0)
            } else if abs(z[j] - self.x[i]) <= change_threshold(self.x[i]) {
                self.x[i]
            } else {
                z[j].clamp(f.lower, f.upper)
            };
        }
        out
    }

    /// Cost of moving from the query point to `x_prime`.
    pub fn cost(&self, x_prime: &[f64]) -> f64 {
        let delta: Vec<f64> = x_prime.iter().zip(&self.x).map(|(a, b)| a - b).collect();
        self.cost.eval(&delta)
    }

    fn bindings(&self, rows: &[usize]) -> Vec<Binding> {
        rows.iter()
            .filter_map(|&r| match self.rows[r] {
                Row::Margin => Some(Binding::Margin),
                Row::Lower(feature) => Some(Binding::PrototypeLower { feature }),
                Row::Upper(feature) => Some(Binding::PrototypeUpper { feature }),
                Row::Deviation => None,
            })
            .collect()
    }
}

/// Solves counterfactual queries against one model.
#[derive(Debug, Clone)]
pub struct Explainer<'a> {
    model: &'a LinearSvm,
    schema: &'a FeatureSchema,
    stats: &'a Statistics,
    solver: SolverConfig,
}

impl<'a> Explainer<'a> {
    pub fn new(model: &'a LinearSvm, schema: &'a FeatureSchema, stats: &'a Statistics) -> Result<Self, ExplainError> {
        model.check_schema(schema)?;
        Ok(Explainer { model, schema, stats, solver: SolverConfig::default() })
    }

    pub fn with_solver(mut self, solver: SolverConfig) -> Self {
        self.solver = solver;
        self
    }

    pub fn model(&self) -> &LinearSvm {
        self.model
    }

    pub fn schema(&self) -> &FeatureSchema {
        self.schema
    }

    pub fn statistics(&self) -> &Statistics {
        self.stats
    }

    pub fn solver(&self) -> &SolverConfig {
        &self.solver
    }

    /// Query weights (or the schema's) with the query's frozen features set
    /// to infinity.
    pub fn effective_weights(&self, q: &CounterfactualQuery) -> Result<Vec<f64>, ExplainError> {
        let n = self.schema.len();
        let mut w = match &q.weights {
            Some(w) if w.len() != n => return Err(ExplainError::Dimension { expected: n, found: w.len() }),
            Some(w) => w.clone(),
            None => self.schema.weights(),
        };
        for (feature, &weight) in w.iter().enumerate() {
            if !(weight > 0.0) {
                return Err(ExplainError::InvalidWeight { feature, weight });
            }
        }
        for &i in &q.frozen {
            *w.get_mut(i).ok_or(ExplainError::FeatureIndex(i))? = f64::INFINITY;
        }
        Ok(w)
    }

    pub fn target(&self, q: &CounterfactualQuery) -> Result<Label, ExplainError> {
        match q.target {
            Some(t) => Ok(t),
            None => Ok(self.model.predict(&q.x)?.opposite()),
        }
    }

    fn cost(&self, variant: Variant, weights: &[f64]) -> Result<Cost, ExplainError> {
        // Frozen coordinates never move, so any finite stand-in gives the same
        // cost; 1 keeps the correlated forms well scaled.
        let w: Vec<f64> = weights.iter().map(|&v| if v.is_finite() { v } else { 1.0 }).collect();
        let n = w.len();
        let s = if variant.uses_covariance() {
            let cov = self
                .stats
                .covariance
                .as_ref()
                .ok_or(ExplainError::MissingStatistics(variant.as_str(), "a covariance model"))?;
            if cov.n_features() != n {
                return Err(ExplainError::Dimension { expected: n, found: cov.n_features() });
            }
            Some(cov.inv_sqrt_full())
        } else {
            None
        };
        Ok(match (variant, s) {
            (Variant::Sparse, _) => Cost::L1(Matrix::from_diagonal(&w)),
            (Variant::SparseCorrelated, Some(s)) => {
                let mut g = s;
                for i in 0..n {
                    g.row_mut(i).iter_mut().for_each(|v| *v *= w[i]);
                }
                Cost::L1(g)
            }
            (Variant::Correlated, Some(s)) => {
                let mut sw = s.clone();
                for i in 0..n {
                    sw.row_mut(i).iter_mut().zip(&w).for_each(|(v, wk)| *v *= wk);
                }
                let mut m = sw.mul(&s);
                // symmetrize away rounding
                for i in 0..n {
                    for j in 0..i {
                        let a = 0.5 * (m[(i, j)] + m[(j, i)]);
                        m.row_mut(i)[j] = a;
                        m.row_mut(j)[i] = a;
                    }
                }
                Cost::Quadratic(m)
            }
            _ => Cost::Quadratic(Matrix::from_diagonal(&w)),
        })
    }

    fn radii(&self, eps: PlausibilityRadius) -> Result<Vec<f64>, ExplainError> {
        let n = self.schema.len();
        match eps {
            PlausibilityRadius::Absolute(e) | PlausibilityRadius::Standardized(e) if !(e > 0.0) => {
                Err(ExplainError::InvalidEpsilon(e))
            }
            PlausibilityRadius::Absolute(e) => Ok(vec![e; n]),
            PlausibilityRadius::Standardized(e) => {
                let scales =
                    self.stats.scales.as_ref().ok_or(ExplainError::MissingStatistics("plausible", "feature scales"))?;
                if scales.len() != n {
                    return Err(ExplainError::Dimension { expected: n, found: scales.len() });
                }
                Ok((0..n).map(|i| if self.schema.is_continuous(i) { e * scales[i] } else { e }).collect())
            }
        }
    }

    /// Largest `y' (<w, x'> + b)` over points that respect bounds, groups
    /// and frozen features (the prototype box is not considered).
    fn best_reachable_margin(&self, x: &[f64], weights: &[f64], target: Label) -> f64 {
        let s = target.sign();
        let w = self.model.weights();
        let mut best = s * self.model.intercept();
        for (i, f) in self.schema.features().iter().enumerate() {
            if !weights[i].is_finite() {
                best += s * w[i] * x[i];
            } else if f.is_continuous() {
                let c = s * w[i];
                best += if c > 0.0 {
                    c * f.upper
                } else if c < 0.0 {
                    c * f.lower
                } else {
                    0.0
                };
            }
        }
        for g in self.schema.groups() {
            let fixed_on = g.members.iter().any(|&m| !weights[m].is_finite() && x[m] == 1.0);
            if fixed_on {
                continue;
            }
            let pick = g
                .members
                .iter()
                .filter(|&&m| weights[m].is_finite())
                .map(|&m| s * w[m])
                .fold(f64::NEG_INFINITY, f64::max);
            if pick.is_finite() {
                best += pick;
            }
        }
        best
    }

    /// Builds the program for `q` without solving it.
    pub fn build_problem(&self, q: &CounterfactualQuery) -> Result<Problem, ExplainError> {
        let n = self.schema.len();
        if q.x.len() != n {
            return Err(ExplainError::Dimension { expected: n, found: q.x.len() });
        }
        validate_row(self.schema, 0, &q.x)?;
        let weights = self.effective_weights(q)?;
        let target = self.target(q)?;
        let x = &q.x;
        let free: Vec<usize> = (0..n).filter(|&i| weights[i].is_finite()).collect();
        if free.is_empty() {
            return Err(ExplainError::AllFrozen);
        }
        if self.best_reachable_margin(x, &weights, target) < 1.0 - 1e-9 {
            return Err(ExplainError::MarginUnreachable { target });
        }
        let cost = self.cost(q.variant, &weights)?;
        let nf = free.len();

        let l1_rows: Vec<usize> = match &cost {
            Cost::L1(g) => (0..n).filter(|&k| free.iter().any(|&l| g[(k, l)] != 0.0)).collect(),
            Cost::Quadratic(_) => Vec::new(),
        };
        let nv = nf + l1_rows.len();
        let mut p = MixedIntegerProgram::new(nv);
        let mut rows = Vec::new();

        match &cost {
            Cost::Quadratic(m) => {
                for (a, &i) in free.iter().enumerate() {
                    let mut lin = 0.0;
                    for (b, &j) in free.iter().enumerate() {
                        p.quadratic.row_mut(a)[b] = 2.0 * m[(i, j)];
                        lin += m[(i, j)] * x[j];
                    }
                    p.linear[a] = -2.0 * lin;
                }
                let xf: Vec<f64> = free.iter().map(|&i| x[i]).collect();
                p.offset = m.select(&free, &free).quad_form(&xf);
            }
            Cost::L1(_) => {}
        }

        // margin: -y' <w_F, z> <= y' (b + <w_R, x_R>) - 1
        let s = target.sign();
        let w = self.model.weights();
        let mut row = vec![0.0; nv];
        for (a, &i) in free.iter().enumerate() {
            row[a] = -s * w[i];
        }
        let fixed: f64 = (0..n).filter(|&i| !weights[i].is_finite()).map(|i| w[i] * x[i]).sum();
        p.add_inequality(&row, s * (self.model.intercept() + fixed) - 1.0);
        rows.push(Row::Margin);

        if q.variant == Variant::Plausible {
            let eps = q.epsilon.unwrap_or_default();
            let radii = self.radii(eps)?;
            let protos = self
                .stats
                .prototypes
                .as_ref()
                .ok_or(ExplainError::MissingStatistics("plausible", "class prototypes"))?;
            let v = protos.get(target);
            if v.len() != n {
                return Err(ExplainError::Dimension { expected: n, found: v.len() });
            }
            for i in 0..n {
                if !radii[i].is_finite() {
                    continue;
                }
                let (lo, hi) = (v[i] - radii[i], v[i] + radii[i]);
                match free.iter().position(|&f| f == i) {
                    None if x[i] < lo || x[i] > hi => return Err(ExplainError::EpsilonTooSmall { epsilon: eps }),
                    None => {}
                    Some(a) => {
                        let mut r = vec![0.0; nv];
                        r[a] = 1.0;
                        p.add_inequality(&r, hi);
                        rows.push(Row::Upper(i));
                        r[a] = -1.0;
                        p.add_inequality(&r, -lo);
                        rows.push(Row::Lower(i));
                    }
                }
            }
        }

        if let Cost::L1(g) = &cost {
            for (d, &k) in l1_rows.iter().enumerate() {
                let aux = nf + d;
                p.linear[aux] = 1.0;
                p.set_bounds(aux, 0.0, f64::INFINITY);
                let gx: f64 = free.iter().map(|&l| g[(k, l)] * x[l]).sum();
                // (G(x - x'))_k <= d_k and -(G(x - x'))_k <= d_k
                let mut r = vec![0.0; nv];
                for (a, &l) in free.iter().enumerate() {
                    r[a] = -g[(k, l)];
                }
                r[aux] = -1.0;
                p.add_inequality(&r, -gx);
                rows.push(Row::Deviation);
                for (a, &l) in free.iter().enumerate() {
                    r[a] = g[(k, l)];
                }
                p.add_inequality(&r, gx);
                rows.push(Row::Deviation);
            }
        }

        for g in self.schema.groups() {
            let members: Vec<usize> = g.members.iter().filter_map(|&m| free.iter().position(|&f| f == m)).collect();
            if members.is_empty() {
                continue;
            }
            let on: f64 = g.members.iter().filter(|&&m| !weights[m].is_finite()).map(|&m| x[m]).sum();
            let mut r = vec![0.0; nv];
            members.iter().for_each(|&a| r[a] = 1.0);
            p.add_equality(&r, 1.0 - on);
        }

        for (a, &i) in free.iter().enumerate() {
            let f = self.schema.feature(i);
            if f.is_continuous() {
                p.set_bounds(a, f.lower, f.upper);
            } else {
                p.set_binary(a);
            }
        }

        Ok(Problem { program: p, target, x: x.clone(), free, rows, cost })
    }

    /// Solves `q` with the variant it names.
    pub fn explain(&self, q: &CounterfactualQuery) -> Result<Counterfactual, ExplainError> {
        let problem = self.build_problem(q)?;
        let res = solve_mip(&problem.program, &self.solver)?;
        if res.x_star.is_empty() {
            if res.status != SolveStatus::Infeasible {
                return Err(ExplainError::NoIncumbent(res.status));
            }
            // The margin is reachable (checked while building), so only the
            // prototype box can be to blame.
            return Err(match q.variant {
                Variant::Plausible => ExplainError::EpsilonTooSmall { epsilon: q.epsilon.unwrap_or_default() },
                _ => ExplainError::MarginUnreachable { target: problem.target },
            });
        }
        let x_prime = problem.lift(self.schema, &res.x_star);
        let objective = problem.cost(&x_prime);
        let mut cf = Counterfactual::assess(
            self.model,
            self.schema,
            Method::from(q.variant),
            &q.x,
            x_prime,
            problem.target,
            objective,
        )?;
        cf.solver = Some(SolverStats {
            status: res.status,
            nodes_explored: res.nodes_explored,
            gap: res.gap,
            binding: problem.bindings(&res.binding_rows),
        });
        Ok(cf)
    }

    /// `explain` with the query's variant replaced.
    pub fn explain_as(&self, q: &CounterfactualQuery, variant: Variant) -> Result<Counterfactual, ExplainError> {
        let mut q = q.clone();
        q.variant = variant;
        self.explain(&q)
    }

    /// Cost of `x_prime` under the quadratic form of `q`'s variant, for
    /// comparing against points produced elsewhere.
    pub fn cost_of(&self, q: &CounterfactualQuery, x_prime: &[f64]) -> Result<f64, ExplainError> {
        let weights = self.effective_weights(q)?;
        let cost = self.cost(q.variant, &weights)?;
        let delta: Vec<f64> = x_prime.iter().zip(&q.x).map(|(a, b)| a - b).collect();
        if delta.len() != self.schema.len() {
            return Err(ExplainError::Dimension { expected: self.schema.len(), found: delta.len() });
        }
        if (0..delta.len()).any(|i| !weights[i].is_finite() && delta[i] != 0.0) {
            return Ok(f64::INFINITY);
        }
        Ok(cost.eval(&delta))
    }
}
