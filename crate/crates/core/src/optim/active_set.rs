// Primal active-set method for convex QPs with PSD Hessian.
//
// Each iteration minimizes the objective on the null space of the working
// set. Positive curvature there gives a Newton step; a zero-curvature
// descent direction gives a ray that must be stopped by a constraint (else the
// problem is unbounded). With Q = 0 this walks vertices like the simplex
// method. A phase-1 LP with elastic variables supplies the starting point.

use alloc::vec;
use alloc::vec::Vec;

use super::{MixedIntegerProgram, SolverConfig, SolverError};
use crate::linalg::{FullQr, Matrix, SymmetricEigen};
use crate::math::{abs, dot, norm2, norm_inf};

pub(crate) struct Relaxed {
    pub x: Vec<f64>,
    pub objective: f64,
}

/// Reduced problem over the free (non-fixed) variables. Bounds are stored as
/// trailing inequality rows starting at `n_general`.
struct Qp {
    n: usize,
    q: Matrix,
    has_quadratic: bool,
    c: Vec<f64>,
    ineq: Vec<Vec<f64>>,
    ineq_rhs: Vec<f64>,
    n_general: usize,
    eq: Vec<Vec<f64>>,
    eq_rhs: Vec<f64>,
}

pub(crate) struct ActiveSetSolution {
    pub x: Vec<f64>,
    /// Working inequality rows at the optimum and their multipliers (>= 0).
    /// Only the KKT tests read these.
    #[cfg_attr(not(test), allow(dead_code))]
    pub work: Vec<usize>,
    #[cfg_attr(not(test), allow(dead_code))]
    pub ineq_multipliers: Vec<f64>,
    #[allow(dead_code)]
    pub iterations: usize,
}

/// Solves the relaxation of `p` with the given variable bounds. `Ok(None)`
/// means infeasible.
pub(crate) fn solve_with_bounds(
    p: &MixedIntegerProgram,
    lower: &[f64],
    upper: &[f64],
    cfg: &SolverConfig,
) -> Result<Option<Relaxed>, SolverError> {
    let n = p.n_vars();
    let tol = cfg.feasibility_tol;
    let mut full = vec![0.0; n];
    let mut free = Vec::with_capacity(n);
    for j in 0..n {
        if lower[j] > upper[j] {
            return Ok(None);
        }
        if lower[j] == upper[j] {
            full[j] = lower[j];
        } else {
            free.push(j);
        }
    }

    // Substitute fixed variables.
    let nf = free.len();
    let mut q = Matrix::zeros(nf, nf);
    let mut c = vec![0.0; nf];
    for (a, &i) in free.iter().enumerate() {
        c[a] = p.linear[i];
        for j in 0..n {
            let qij = p.quadratic[(i, j)];
            if qij == 0.0 {
                continue;
            }
            if lower[j] == upper[j] {
                c[a] += qij * full[j];
            }
        }
        for (b, &j) in free.iter().enumerate() {
            q[(a, b)] = p.quadratic[(i, j)];
        }
    }
    let has_quadratic = q.max_abs() > 0.0;

    let mut ineq = Vec::new();
    let mut ineq_rhs = Vec::new();
    for (row, &b) in p.ineq.rows_iter().zip(&p.ineq_rhs) {
        let (coef, rhs) = substitute(row, b, &free, &full, lower, upper);
        if norm_inf(&coef) == 0.0 {
            if rhs < -tol * (1.0 + abs(b)) {
                return Ok(None);
            }
            continue;
        }
        ineq.push(coef);
        ineq_rhs.push(rhs);
    }
    let mut eq = Vec::new();
    let mut eq_rhs = Vec::new();
    for (row, &d) in p.eq.rows_iter().zip(&p.eq_rhs) {
        let (coef, rhs) = substitute(row, d, &free, &full, lower, upper);
        if norm_inf(&coef) == 0.0 {
            if abs(rhs) > tol * (1.0 + abs(d)) {
                return Ok(None);
            }
            continue;
        }
        eq.push(coef);
        eq_rhs.push(rhs);
    }
    let n_general = ineq.len();
    for (a, &j) in free.iter().enumerate() {
        if upper[j].is_finite() {
            let mut r = vec![0.0; nf];
            r[a] = 1.0;
            ineq.push(r);
            ineq_rhs.push(upper[j]);
        }
        if lower[j].is_finite() {
            let mut r = vec![0.0; nf];
            r[a] = -1.0;
            ineq.push(r);
            ineq_rhs.push(-lower[j]);
        }
    }

    if nf > 0 {
        let qp = Qp { n: nf, q, has_quadratic, c, ineq, ineq_rhs, n_general, eq, eq_rhs };
        let x0: Vec<f64> = free.iter().map(|&j| 0.0f64.clamp(lower[j], upper[j])).collect();
        let start = match feasible_start(&qp, x0, cfg)? {
            Some(x) => x,
            None => return Ok(None),
        };
        let eq_work = independent_subset(&qp.eq, &[], qp.n);
        let sol = run(&qp, start, &eq_work, cfg)?;
        for (&j, v) in free.iter().zip(&sol.x) {
            full[j] = *v;
        }
    } else if p.max_violation(&full) > tol * (1.0 + norm_inf(&p.ineq_rhs).max(norm_inf(&p.eq_rhs))) {
        return Ok(None);
    }
    let objective = p.objective(&full);
    Ok(Some(Relaxed { x: full, objective }))
}

fn substitute(row: &[f64], rhs: f64, free: &[usize], full: &[f64], lower: &[f64], upper: &[f64]) -> (Vec<f64>, f64) {
    let mut r = rhs;
    for (j, &a) in row.iter().enumerate() {
        if a != 0.0 && lower[j] == upper[j] {
            r -= a * full[j];
        }
    }
    (free.iter().map(|&j| row[j]).collect(), r)
}

fn max_row_violation(rows: &[Vec<f64>], rhs: &[f64], x: &[f64]) -> f64 {
    rows.iter().zip(rhs).fold(0.0, |m, (a, b)| f64::max(m, dot(a, x) - b))
}

/// Returns a point satisfying all rows of `qp`, or `None` when the phase-1
/// problem certifies infeasibility. `x0` must satisfy the bound rows.
fn feasible_start(qp: &Qp, x0: Vec<f64>, cfg: &SolverConfig) -> Result<Option<Vec<f64>>, SolverError> {
    let tol = cfg.feasibility_tol;
    let scale = 1.0 + norm_inf(&qp.ineq_rhs).max(norm_inf(&qp.eq_rhs));
    let general_viol = max_row_violation(&qp.ineq[..qp.n_general], &qp.ineq_rhs[..qp.n_general], &x0);
    let eq_res: Vec<f64> = qp.eq.iter().zip(&qp.eq_rhs).map(|(a, d)| dot(a, &x0) - d).collect();
    if general_viol <= 0.0 && eq_res.iter().all(|r| *r == 0.0) {
        return Ok(Some(x0));
    }

    // Variables: x (n), t (1), e+ (p), e- (p).
    let n = qp.n;
    let pe = qp.eq.len();
    let dim = n + 1 + 2 * pe;
    let t_idx = n;
    let widen = |a: &[f64]| {
        let mut r = vec![0.0; dim];
        r[..n].copy_from_slice(a);
        r
    };
    let mut ineq = Vec::new();
    let mut ineq_rhs = Vec::new();
    for (i, (a, b)) in qp.ineq.iter().zip(&qp.ineq_rhs).enumerate() {
        let mut r = widen(a);
        if i < qp.n_general {
            r[t_idx] = -1.0;
        }
        ineq.push(r);
        ineq_rhs.push(*b);
    }
    let n_general = ineq.len();
    for k in n..dim {
        let mut r = vec![0.0; dim];
        r[k] = -1.0;
        ineq.push(r);
        ineq_rhs.push(0.0);
    }
    let mut eq = Vec::new();
    for (k, a) in qp.eq.iter().enumerate() {
        let mut r = widen(a);
        r[n + 1 + k] = -1.0;
        r[n + 1 + pe + k] = 1.0;
        eq.push(r);
    }
    let mut c = vec![0.0; dim];
    c[n..].iter_mut().for_each(|v| *v = 1.0);
    let phase1 = Qp {
        n: dim,
        q: Matrix::zeros(dim, dim),
        has_quadratic: false,
        c,
        ineq,
        ineq_rhs,
        n_general,
        eq,
        eq_rhs: qp.eq_rhs.clone(),
    };
    let mut z = widen(&x0);
    z[t_idx] = general_viol.max(0.0);
    for (k, r) in eq_res.iter().enumerate() {
        z[n + 1 + k] = r.max(0.0);
        z[n + 1 + pe + k] = (-r).max(0.0);
    }
    let eq_work: Vec<usize> = (0..pe).collect();
    let sol = run(&phase1, z, &eq_work, cfg)?;
    let infeasibility: f64 = sol.x[n..].iter().sum();
    if infeasibility > tol * scale {
        return Ok(None);
    }
    Ok(Some(sol.x[..n].to_vec()))
}

/// Greedy subset of `candidates` rows that are linearly independent of each
/// other and of `base`.
fn independent_subset(candidates: &[Vec<f64>], base: &[&[f64]], n: usize) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    let mut normals: Vec<&[f64]> = base.to_vec();
    for (i, a) in candidates.iter().enumerate() {
        if normals.len() >= n {
            break;
        }
        if is_independent(&normals, a, n) {
            normals.push(a);
            chosen.push(i);
        }
    }
    chosen
}

fn is_independent(normals: &[&[f64]], cand: &[f64], n: usize) -> bool {
    let k = normals.len() + 1;
    if k > n {
        return false;
    }
    let mut m = Matrix::zeros(n, k);
    for (col, a) in normals.iter().chain(core::iter::once(&cand)).enumerate() {
        for i in 0..n {
            m[(i, col)] = a[i];
        }
    }
    let qr = FullQr::new(&m);
    abs(qr.r[(k - 1, k - 1)]) > 1e-9 * norm2(cand).max(f64::MIN_POSITIVE)
}

fn run(qp: &Qp, x0: Vec<f64>, eq_work: &[usize], cfg: &SolverConfig) -> Result<ActiveSetSolution, SolverError> {
    let n = qp.n;
    let m = qp.ineq.len();
    let max_iter = cfg.max_iter.unwrap_or(500 + 50 * (n + m));
    let mut x = x0;

    // Initial working set: rows active at x0 that keep the normals independent.
    let mut work: Vec<usize> = Vec::new();
    {
        let mut normals: Vec<&[f64]> = eq_work.iter().map(|&k| qp.eq[k].as_slice()).collect();
        for i in 0..m {
            if normals.len() >= n {
                break;
            }
            let slack = qp.ineq_rhs[i] - dot(&qp.ineq[i], &x);
            if abs(slack) <= cfg.feasibility_tol * (1.0 + abs(qp.ineq_rhs[i]))
                && is_independent(&normals, &qp.ineq[i], n)
            {
                normals.push(&qp.ineq[i]);
                work.push(i);
            }
        }
    }

    let mut degenerate_streak = 0usize;
    let mut last_residual = 0.0;
    for iter in 0..max_iter {
        let mut g = if qp.has_quadratic { qp.q.mul_vec(&x) } else { vec![0.0; n] };
        for (gi, ci) in g.iter_mut().zip(&qp.c) {
            *gi += ci;
        }
        let gscale = 1.0 + norm_inf(&g);

        let normals: Vec<&[f64]> =
            eq_work.iter().map(|&k| qp.eq[k].as_slice()).chain(work.iter().map(|&i| qp.ineq[i].as_slice())).collect();
        let k = normals.len();
        let qr = if k > 0 {
            let mut nm = Matrix::zeros(n, k);
            for (col, a) in normals.iter().enumerate() {
                for i in 0..n {
                    nm[(i, col)] = a[i];
                }
            }
            Some(FullQr::new(&nm))
        } else {
            None
        };
        let r = n - k;

        // Search direction in the null space of the working normals.
        let mut p = vec![0.0; n];
        let mut ray = false;
        if r > 0 {
            let z = match &qr {
                Some(qr) => {
                    let cols: Vec<usize> = (k..n).collect();
                    let rows: Vec<usize> = (0..n).collect();
                    qr.q.select(&rows, &cols)
                }
                None => Matrix::identity(n),
            };
            let gz = z.tr_mul_vec(&g);
            let grad_tol = cfg.optimality_tol * gscale;
            let v: Vec<f64> = if qp.has_quadratic {
                let qz = qp.q.mul(&z);
                let hz = z.transpose().mul(&qz);
                let eig = SymmetricEigen::new(&hz)
                    .ok_or(SolverError::NumericalBreakdown { iterations: iter, residual: f64::NAN })?;
                let top = eig.values.iter().fold(0.0f64, |a, v| a.max(abs(*v)));
                let curv_tol = 1e-11 * top.max(1.0);
                let gt = eig.vectors.tr_mul_vec(&gz);
                let flat: Vec<usize> = (0..r).filter(|&j| eig.values[j] <= curv_tol && abs(gt[j]) > grad_tol).collect();
                let mut v = vec![0.0; r];
                if !flat.is_empty() {
                    ray = true;
                    for &j in &flat {
                        for a in 0..r {
                            v[a] -= gt[j] * eig.vectors[(a, j)];
                        }
                    }
                } else {
                    for j in 0..r {
                        if eig.values[j] > curv_tol {
                            let s = gt[j] / eig.values[j];
                            for a in 0..r {
                                v[a] -= s * eig.vectors[(a, j)];
                            }
                        }
                    }
                }
                v
            } else if norm_inf(&gz) > grad_tol {
                ray = true;
                gz.iter().map(|v| -v).collect()
            } else {
                vec![0.0; r]
            };
            p = z.mul_vec(&v);
        }

        let pnorm = norm_inf(&p);
        if !ray && pnorm <= 1e-12 * (1.0 + norm_inf(&x)) {
            // Stationary on the working face: check multiplier signs.
            let lambda = match &qr {
                Some(qr) => {
                    let neg: Vec<f64> = g.iter().map(|v| -v).collect();
                    qr.solve_least_squares(&neg)
                }
                None => Vec::new(),
            };
            let mut residual = g.clone();
            for (a, l) in normals.iter().zip(&lambda) {
                for i in 0..n {
                    residual[i] += l * a[i];
                }
            }
            last_residual = norm_inf(&residual);
            let ineq_lambda = &lambda[eq_work.len()..];
            let lam_tol = cfg.optimality_tol * gscale;
            let bland = degenerate_streak > n;
            let mut drop: Option<usize> = None;
            for (pos, &l) in ineq_lambda.iter().enumerate() {
                if l >= -lam_tol {
                    continue;
                }
                drop = match drop {
                    None => Some(pos),
                    Some(d) if bland && work[pos] < work[d] => Some(pos),
                    Some(d) if !bland && l < ineq_lambda[d] => Some(pos),
                    keep => keep,
                };
            }
            match drop {
                None => {
                    return Ok(ActiveSetSolution { x, ineq_multipliers: ineq_lambda.to_vec(), work, iterations: iter })
                }
                Some(pos) => {
                    work.remove(pos);
                    continue;
                }
            }
        }

        // Ratio test over inactive inequality rows; ties go to the lowest index.
        let pn2 = norm2(&p);
        let mut alpha = if ray { f64::INFINITY } else { 1.0 };
        let mut blocking: Option<usize> = None;
        for i in 0..m {
            if work.contains(&i) {
                continue;
            }
            let a = &qp.ineq[i];
            let ap = dot(a, &p);
            if ap <= 1e-12 * norm2(a) * pn2 {
                continue;
            }
            let slack = (qp.ineq_rhs[i] - dot(a, &x)).max(0.0);
            let t = slack / ap;
            if t < alpha {
                alpha = t;
                blocking = Some(i);
            }
        }
        if alpha.is_infinite() {
            return Err(SolverError::Unbounded);
        }
        for (xi, pi) in x.iter_mut().zip(&p) {
            *xi += alpha * pi;
        }
        if let Some(i) = blocking {
            work.push(i);
        }
        if alpha == 0.0 {
            degenerate_streak += 1;
        } else {
            degenerate_streak = 0;
        }
    }
    Err(SolverError::NumericalBreakdown { iterations: max_iter, residual: last_residual })
}
