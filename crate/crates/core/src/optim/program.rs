use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::SolverError;
use crate::linalg::{Matrix, SymmetricEigen};
use crate::math::{abs, dot};

/// `min 1/2 x^T Q x + c^T x + offset`
/// subject to `A x <= b`, `E x = d`, `lower <= x <= upper`, and
/// `x_j in {0, 1}` wherever `integer[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedIntegerProgram {
    pub quadratic: Matrix,
    pub linear: Vec<f64>,
    pub offset: f64,
    pub ineq: Matrix,
    pub ineq_rhs: Vec<f64>,
    pub eq: Matrix,
    pub eq_rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub integer: Vec<bool>,
}

impl MixedIntegerProgram {
    /// Program in `n` free continuous variables with zero objective.
    pub fn new(n: usize) -> Self {
        MixedIntegerProgram {
            quadratic: Matrix::zeros(n, n),
            linear: vec![0.0; n],
            offset: 0.0,
            ineq: Matrix::zeros(0, n),
            ineq_rhs: Vec::new(),
            eq: Matrix::zeros(0, n),
            eq_rhs: Vec::new(),
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
            integer: vec![false; n],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.linear.len()
    }

    pub fn add_inequality(&mut self, row: &[f64], rhs: f64) -> usize {
        self.ineq.push_row(row);
        self.ineq_rhs.push(rhs);
        self.ineq_rhs.len() - 1
    }

    pub fn add_equality(&mut self, row: &[f64], rhs: f64) -> usize {
        self.eq.push_row(row);
        self.eq_rhs.push(rhs);
        self.eq_rhs.len() - 1
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    pub fn set_binary(&mut self, j: usize) {
        self.integer[j] = true;
        self.lower[j] = self.lower[j].max(0.0);
        self.upper[j] = self.upper[j].min(1.0);
    }

    pub fn binaries(&self) -> Vec<usize> {
        (0..self.n_vars()).filter(|&j| self.integer[j]).collect()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        0.5 * self.quadratic.quad_form(x) + dot(&self.linear, x) + self.offset
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut v: f64 = 0.0;
        for (row, b) in self.ineq.rows_iter().zip(&self.ineq_rhs) {
            v = v.max(dot(row, x) - b);
        }
        for (row, d) in self.eq.rows_iter().zip(&self.eq_rhs) {
            v = v.max(abs(dot(row, x) - d));
        }
        for j in 0..x.len() {
            v = v.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        v
    }

    pub(crate) fn relaxed_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lower = self.lower.clone();
        let mut upper = self.upper.clone();
        for j in 0..self.n_vars() {
            if self.integer[j] {
                lower[j] = lower[j].max(0.0);
                upper[j] = upper[j].min(1.0);
            }
        }
        (lower, upper)
    }

    pub(crate) fn binding_rows(&self, x: &[f64], tol: f64) -> Vec<usize> {
        self.ineq
            .rows_iter()
            .zip(&self.ineq_rhs)
            .enumerate()
            .filter(|(_, (row, b))| abs(dot(row, x) - *b) <= tol * (1.0 + abs(**b)))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let n = self.n_vars();
        let bad = |msg: &str| Err(SolverError::InvalidProgram(msg.into()));
        if self.quadratic.nrows() != n || self.quadratic.ncols() != n {
            return bad("quadratic term must be n x n");
        }
        if self.ineq.ncols() != n && self.ineq.nrows() > 0 {
            return bad("inequality rows have wrong length");
        }
        if self.eq.ncols() != n && self.eq.nrows() > 0 {
            return bad("equality rows have wrong length");
        }
        if self.ineq.nrows() != self.ineq_rhs.len() || self.eq.nrows() != self.eq_rhs.len() {
            return bad("row and right-hand-side counts differ");
        }
        if self.lower.len() != n || self.upper.len() != n || self.integer.len() != n {
            return bad("bounds or integrality mask have wrong length");
        }
        let finite = |s: &[f64]| s.iter().all(|v| v.is_finite());
        if !finite(self.quadratic.as_slice())
            || !finite(&self.linear)
            || !self.offset.is_finite()
            || !finite(self.ineq.as_slice())
            || !finite(&self.ineq_rhs)
            || !finite(self.eq.as_slice())
            || !finite(&self.eq_rhs)
        {
            return bad("objective and constraint data must be finite");
        }
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] > self.upper[j] {
                return Err(SolverError::InvalidProgram(format!("variable {j} has empty bounds")));
            }
        }
        if !self.quadratic.is_symmetric(1e-12) {
            return bad("quadratic term is not symmetric");
        }
        if n > 0 && self.quadratic.max_abs() > 0.0 {
            let eig = SymmetricEigen::new(&self.quadratic).ok_or(SolverError::InvalidProgram("eigen".into()))?;
            let scale = self.quadratic.max_abs().max(1.0);
            if eig.values[0] < -1e-10 * scale {
                return Err(SolverError::InvalidProgram(format!(
                    "quadratic term is not positive semidefinite (min eigenvalue {:e})",
                    eig.values[0]
                )));
            }
        }
        Ok(())
    }
}

/// Plain-text dump for cross-checking with external solvers.
impl fmt::Display for MixedIntegerProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.n_vars();
        writeln!(f, "variables {n}")?;
        write!(f, "binary")?;
        for j in self.binaries() {
            write!(f, " {j}")?;
        }
        writeln!(f)?;
        writeln!(f, "offset {:?}", self.offset)?;
        write!(f, "linear")?;
        for c in &self.linear {
            write!(f, " {c:?}")?;
        }
        writeln!(f)?;
        for i in 0..n {
            for j in i..n {
                let q = self.quadratic[(i, j)];
                if q != 0.0 {
                    writeln!(f, "quadratic {i} {j} {q:?}")?;
                }
            }
        }
        for (row, b) in self.ineq.rows_iter().zip(&self.ineq_rhs) {
            write!(f, "ineq")?;
            for a in row {
                write!(f, " {a:?}")?;
            }
            writeln!(f, " <= {b:?}")?;
        }
        for (row, d) in self.eq.rows_iter().zip(&self.eq_rhs) {
            write!(f, "eq")?;
            for a in row {
                write!(f, " {a:?}")?;
            }
            writeln!(f, " = {d:?}")?;
        }
        for j in 0..n {
            writeln!(f, "bounds {j} {:?} {:?}", self.lower[j], self.upper[j])?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn rejects_indefinite_quadratic() {
        let mut p = MixedIntegerProgram::new(2);
        p.quadratic = Matrix::from_rows(&[[1.0, 0.0], [0.0, -1.0]]);
        assert!(matches!(p.validate(), Err(SolverError::InvalidProgram(_))));
    }

    #[test]
    fn rejects_empty_bounds_and_nan() {
        let mut p = MixedIntegerProgram::new(1);
        p.set_bounds(0, 1.0, 0.0);
        assert!(p.validate().is_err());
        let mut p = MixedIntegerProgram::new(1);
        p.linear[0] = f64::NAN;
        assert!(p.validate().is_err());
    }

    #[test]
    fn dump_lists_rows() {
        let mut p = MixedIntegerProgram::new(2);
        p.add_inequality(&[1.0, -1.0], 3.0);
        p.set_binary(1);
        let text = p.to_string();
        assert!(text.contains("ineq 1.0 -1.0 <= 3.0"));
        assert!(text.contains("binary 1"));
    }
}
