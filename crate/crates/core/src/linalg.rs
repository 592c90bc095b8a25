//! Small dense linear algebra: a row-major matrix, full Householder QR and a
//! cyclic Jacobi eigensolver for symmetric matrices.
//!
//! Problem sizes in this crate are tens of variables, so everything is dense
//! and favors accuracy over speed.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::math::{abs, dot, sqrt};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    /// Builds a matrix from row slices. Panics if rows have unequal lengths.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix { rows: rows.len(), cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn push_row(&mut self, row: &[f64]) {
        if self.rows == 0 && self.cols == 0 {
            self.cols = row.len();
        }
        assert_eq!(row.len(), self.cols);
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        self.rows_iter().map(|r| dot(r, v)).collect()
    }

    /// `self^T v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, vi) in self.rows_iter().zip(v) {
            for (o, a) in out.iter_mut().zip(r) {
                *o += a * vi;
            }
        }
        out
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// `v^T self v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        dot(v, &self.mul_vec(v))
    }

    /// Submatrix with the given row and column index sets.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                out[(a, b)] = self[(i, j)];
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| f64::max(m, abs(*v)))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let scale = self.max_abs().max(1.0);
        for i in 0..self.rows {
            for j in 0..i {
                if abs(self[(i, j)] - self[(j, i)]) > tol * scale {
                    return false;
                }
            }
        }
        true
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Full QR factorization `A = Q R` of an `m x k` matrix with `k <= m`.
///
/// `q` is the full `m x m` orthogonal factor, so its trailing `m - k` columns
/// span the null space of `A^T` when `A` has full column rank.
#[derive(Debug, Clone)]
pub struct FullQr {
    pub q: Matrix,
    /// Upper-triangular `k x k` block.
    pub r: Matrix,
}

impl FullQr {
    pub fn new(a: &Matrix) -> FullQr {
        let m = a.nrows();
        let k = a.ncols();
        assert!(k <= m, "QR needs at least as many rows as columns");
        let mut r = a.clone();
        let mut q = Matrix::identity(m);
        let mut v = vec![0.0; m];
        for j in 0..k {
            let mut norm = 0.0;
            for i in j..m {
                norm += r[(i, j)] * r[(i, j)];
            }
            let norm = sqrt(norm);
            if norm == 0.0 {
                continue;
            }
            let alpha = if r[(j, j)] > 0.0 { -norm } else { norm };
            for i in 0..m {
                v[i] = if i < j { 0.0 } else { r[(i, j)] };
            }
            v[j] -= alpha;
            let vnorm2: f64 = v[j..].iter().map(|x| x * x).sum();
            if vnorm2 == 0.0 {
                continue;
            }
            // R <- (I - 2 v v^T / v^T v) R
            for c in j..k {
                let s: f64 = (j..m).map(|i| v[i] * r[(i, c)]).sum::<f64>() * 2.0 / vnorm2;
                for i in j..m {
                    r[(i, c)] -= s * v[i];
                }
            }
            // Q <- Q (I - 2 v v^T / v^T v)
            for row in 0..m {
                let s: f64 = (j..m).map(|i| q[(row, i)] * v[i]).sum::<f64>() * 2.0 / vnorm2;
                for i in j..m {
                    q[(row, i)] -= s * v[i];
                }
            }
        }
        let mut rk = Matrix::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                rk[(i, j)] = r[(i, j)];
            }
        }
        FullQr { q, r: rk }
    }

    /// Least-squares solution of `A x = b` (requires full column rank).
    pub fn solve_least_squares(&self, b: &[f64]) -> Vec<f64> {
        let k = self.r.nrows();
        let qtb = self.q.tr_mul_vec(b);
        back_substitute(&self.r, &qtb[..k])
    }
}

/// Solves `R x = b` for upper-triangular `R`. Zero pivots yield zero entries.
pub fn back_substitute(r: &Matrix, b: &[f64]) -> Vec<f64> {
    let k = r.nrows();
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = b[i];
        for j in i + 1..k {
            s -= r[(i, j)] * x[j];
        }
        x[i] = if r[(i, i)] != 0.0 { s / r[(i, i)] } else { 0.0 };
    }
    x
}

/// Eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `values`.
    pub vectors: Matrix,
}

impl SymmetricEigen {
    /// Cyclic Jacobi rotations. Returns `None` if the input is not finite.
    pub fn new(a: &Matrix) -> Option<SymmetricEigen> {
        let n = a.nrows();
        assert_eq!(n, a.ncols());
        if a.as_slice().iter().any(|v| !v.is_finite()) {
            return None;
        }
        let mut m = a.clone();
        // symmetrize
        for i in 0..n {
            for j in 0..i {
                let s = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = s;
                m[(j, i)] = s;
            }
        }
        let mut v = Matrix::identity(n);
        for _sweep in 0..100 {
            let mut off = 0.0;
            let mut diag = 0.0;
            for i in 0..n {
                diag += m[(i, i)] * m[(i, i)];
                for j in 0..i {
                    off += m[(i, j)] * m[(i, j)];
                }
            }
            if off <= 1e-30 * diag.max(f64::MIN_POSITIVE) || off == 0.0 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = m[(p, q)];
                    if apq == 0.0 {
                        continue;
                    }
                    let app = m[(p, p)];
                    let aqq = m[(q, q)];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = if theta >= 0.0 {
                        1.0 / (theta + sqrt(1.0 + theta * theta))
                    } else {
                        -1.0 / (-theta + sqrt(1.0 + theta * theta))
                    };
                    let c = 1.0 / sqrt(1.0 + t * t);
                    let s = t * c;
                    for k in 0..n {
                        let mkp = m[(k, p)];
                        let mkq = m[(k, q)];
                        m[(k, p)] = c * mkp - s * mkq;
                        m[(k, q)] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let mpk = m[(p, k)];
                        let mqk = m[(q, k)];
                        m[(p, k)] = c * mpk - s * mqk;
                        m[(q, k)] = s * mpk + c * mqk;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]).then(i.cmp(&j)));
        let values = order.iter().map(|&i| m[(i, i)]).collect();
        let mut vectors = Matrix::zeros(n, n);
        for (new, &old) in order.iter().enumerate() {
            for k in 0..n {
                vectors[(k, new)] = v[(k, old)];
            }
        }
        Some(SymmetricEigen { values, vectors })
    }

    /// Rebuilds `V f(L) V^T`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.values.len();
        let mut out = Matrix::zeros(n, n);
        for (k, &l) in self.values.iter().enumerate() {
            let fl = f(l);
            for i in 0..n {
                let vik = self.vectors[(i, k)] * fl;
                if vik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += vik * self.vectors[(j, k)];
                }
            }
        }
        out
    }
}

/// Solves a small dense square system by Gaussian elimination with partial
/// pivoting. Returns `None` when the matrix is numerically singular.
pub fn solve_dense(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    assert_eq!(n, b.len());
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| abs(m[(i, col)]).total_cmp(&abs(m[(j, col)])).then(j.cmp(&i)))?;
        if abs(m[(pivot, col)]) <= 1e-13 * scale {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                let t = m[(col, j)];
                m[(col, j)] = m[(pivot, j)];
                m[(pivot, j)] = t;
            }
            rhs.swap(col, pivot);
        }
        for i in col + 1..n {
            let f = m[(i, col)] / m[(col, col)];
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                m[(i, j)] -= f * m[(col, j)];
            }
            rhs[i] -= f * rhs[col];
        }
    }
    Some(back_substitute(&m, &rhs))
}

/// Solves a symmetric positive (semi)definite system by Cholesky after
/// symmetric diagonal equilibration. Pivots below `1e-14` of the scaled
/// diagonal are floored, which regularizes nearly singular systems instead of
/// failing. Returns `None` for a nonpositive diagonal entry.
pub fn solve_spd(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    assert_eq!(n, b.len());
    let mut scale = vec![0.0; n];
    for i in 0..n {
        if !(a[(i, i)] > 0.0) {
            return None;
        }
        scale[i] = 1.0 / sqrt(a[(i, i)]);
    }
    // lower factor of S A S, row-major
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut v = a[(i, j)] * scale[i] * scale[j];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                l[(i, i)] = sqrt(v.max(1e-14));
            } else {
                l[(i, j)] = v / l[(j, j)];
            }
        }
    }
    let mut y: Vec<f64> = b.iter().zip(&scale).map(|(v, s)| v * s).collect();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[(i, k)] * y[k];
        }
        y[i] /= l[(i, i)];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[(k, i)] * y[k];
        }
        y[i] /= l[(i, i)];
    }
    Some(y.iter().zip(&scale).map(|(v, s)| v * s).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx_eq(a: &Matrix, b: &Matrix, tol: f64) -> bool {
        a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| abs(x - y) <= tol)
    }

    #[test]
    fn qr_reconstructs_and_q_is_orthogonal() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [3.0, -1.0], [0.5, 4.0], [2.0, 2.0]]);
        let qr = FullQr::new(&a);
        let qtq = qr.q.transpose().mul(&qr.q);
        assert!(approx_eq(&qtq, &Matrix::identity(4), 1e-12));
        // A = Q[:, :2] R
        let q1 = qr.q.select(&[0, 1, 2, 3], &[0, 1]);
        assert!(approx_eq(&q1.mul(&qr.r), &a, 1e-12));
        // trailing columns are orthogonal to the columns of A
        let z = qr.q.select(&[0, 1, 2, 3], &[2, 3]);
        assert!(a.transpose().mul(&z).max_abs() < 1e-12);
    }

    #[test]
    fn least_squares_recovers_exact_solution() {
        let a = Matrix::from_rows(&[[2.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        let x = [1.5, -2.0];
        let b = a.mul_vec(&x);
        let got = FullQr::new(&a).solve_least_squares(&b);
        assert!(abs(got[0] - 1.5) < 1e-12 && abs(got[1] + 2.0) < 1e-12);
    }

    #[test]
    fn jacobi_matches_known_spectrum() {
        let a = Matrix::from_rows(&[[2.1, 2.0], [2.0, 2.1]]);
        let e = SymmetricEigen::new(&a).unwrap();
        assert!(abs(e.values[0] - 0.1) < 1e-12);
        assert!(abs(e.values[1] - 4.1) < 1e-12);
        let back = e.map_spectrum(|l| l);
        assert!(approx_eq(&back, &a, 1e-12));
    }

    #[test]
    fn jacobi_rejects_non_finite() {
        let a = Matrix::from_rows(&[[1.0, f64::NAN], [f64::NAN, 1.0]]);
        assert!(SymmetricEigen::new(&a).is_none());
    }

    #[test]
    fn dense_solve_and_singular_detection() {
        let a = Matrix::from_rows(&[[0.0, 1.0], [2.0, 1.0]]);
        let x = solve_dense(&a, &[1.0, 5.0]).unwrap();
        assert!(abs(x[0] - 2.0) < 1e-14 && abs(x[1] - 1.0) < 1e-14);
        let s = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        assert!(solve_dense(&s, &[1.0, 2.0]).is_none());
    }

    #[test]
    fn spd_solve_handles_badly_scaled_systems() {
        let a = Matrix::from_rows(&[[4.0, 2.0], [2.0, 3.0]]);
        let x = solve_spd(&a, &[2.0, 1.0]).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-14 && x[1].abs() < 1e-14);
        // diagonal spread of 1e24: plain elimination rejects it, equilibration does not
        let a = Matrix::from_rows(&[[1e12, 1.0], [1.0, 1e-12 + 1e-24]]);
        let x = solve_spd(&a, &[1e12, 1.0]).unwrap();
        let r = a.mul_vec(&x);
        assert!((r[0] - 1e12).abs() < 1e-2 && (r[1] - 1.0).abs() < 1e-12);
        assert!(solve_spd(&Matrix::from_rows(&[[0.0]]), &[1.0]).is_none());
    }
}
