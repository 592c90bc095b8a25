//! Convex quadratic (and linear) programs with optional binary variables.
//!
//! Continuous relaxations are solved by a primal active-set method that
//! handles positive semidefinite objectives, so pure LPs go through the same
//! path (zero-curvature directions act as simplex edges). Binary variables are
//! handled by best-first branch-and-bound on those relaxations.

mod active_set;
mod mip;
mod program;

pub use mip::{brute_force_mip, solve_mip};
pub use program::MixedIntegerProgram;

use alloc::string::String;
use alloc::vec::Vec;
use core::time::Duration;

/// Maximum number of binaries [`brute_force_mip`] will enumerate.
pub const MAX_BRUTE_FORCE_BINARIES: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub mip_gap_abs: f64,
    pub max_nodes: usize,
    /// Active-set iterations per relaxation; `None` scales with problem size.
    pub max_iter: Option<usize>,
    /// Wall-clock limit for branch-and-bound. Ignored without the `std` feature.
    pub time_limit: Option<Duration>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            feasibility_tol: 1e-8,
            optimality_tol: 1e-8,
            mip_gap_abs: 1e-6,
            max_nodes: 100_000,
            max_iter: None,
            time_limit: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !(ok(self.feasibility_tol) && ok(self.optimality_tol) && ok(self.mip_gap_abs)) {
            return Err(SolverError::InvalidConfig("tolerances must be positive and finite".into()));
        }
        if self.max_nodes == 0 {
            return Err(SolverError::InvalidConfig("max_nodes must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    NodeLimit,
    TimeLimit,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::NodeLimit => "node_limit",
            SolveStatus::TimeLimit => "time_limit",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Best point found; empty when no feasible point is known.
    pub x_star: Vec<f64>,
    /// Objective at `x_star` (including the program's constant offset);
    /// `+inf` when no feasible point is known.
    pub objective: f64,
    /// Incumbent objective minus the best open relaxation bound.
    pub gap: f64,
    pub nodes_explored: usize,
    /// Inequality rows (indices into the program's `A`) active at `x_star`.
    pub binding_rows: Vec<usize>,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub(crate) fn infeasible(nodes_explored: usize) -> Self {
        SolveResult {
            status: SolveStatus::Infeasible,
            x_star: Vec::new(),
            objective: f64::INFINITY,
            gap: f64::INFINITY,
            nodes_explored,
            binding_rows: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("invalid program: {0}")]
    InvalidProgram(String),
    #[error("invalid solver config: {0}")]
    InvalidConfig(String),
    #[error("objective is unbounded below")]
    Unbounded,
    #[error("numerical breakdown after {iterations} active-set iterations (stationarity residual {residual:e})")]
    NumericalBreakdown { iterations: usize, residual: f64 },
    #[error("{0} binary variables exceed the brute-force limit of {MAX_BRUTE_FORCE_BINARIES}")]
    TooManyBinaries(usize),
}

/// Solves the continuous relaxation (integrality ignored, binaries boxed in
/// `[0, 1]`).
pub fn solve_relaxation(p: &MixedIntegerProgram, cfg: &SolverConfig) -> Result<SolveResult, SolverError> {
    p.validate()?;
    cfg.validate()?;
    let (lower, upper) = p.relaxed_bounds();
    match active_set::solve_with_bounds(p, &lower, &upper, cfg)? {
        None => Ok(SolveResult::infeasible(1)),
        Some(sol) => Ok(SolveResult {
            status: SolveStatus::Optimal,
            binding_rows: p.binding_rows(&sol.x, cfg.feasibility_tol),
            objective: sol.objective,
            x_star: sol.x,
            gap: 0.0,
            nodes_explored: 1,
        }),
    }
}
