use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::active_set::{solve_with_bounds, Relaxed};
use super::{
    solve_relaxation, MixedIntegerProgram, SolveResult, SolveStatus, SolverConfig, SolverError,
    MAX_BRUTE_FORCE_BINARIES,
};
use crate::math::{abs, round};

const INTEGRALITY_TOL: f64 = 1e-6;

struct Node {
    bound: f64,
    depth: usize,
    id: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
}

// Max-heap order: lowest bound first, then deepest, then oldest.
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(self.depth.cmp(&other.depth)).then(other.id.cmp(&self.id))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

struct Incumbent {
    x: Vec<f64>,
    objective: f64,
}

#[cfg(feature = "std")]
struct Deadline(Option<std::time::Instant>);

#[cfg(feature = "std")]
impl Deadline {
    fn new(cfg: &SolverConfig) -> Self {
        Deadline(cfg.time_limit.map(|d| std::time::Instant::now() + d))
    }
    fn expired(&self) -> bool {
        self.0.is_some_and(|t| std::time::Instant::now() >= t)
    }
}

#[cfg(not(feature = "std"))]
struct Deadline;

#[cfg(not(feature = "std"))]
impl Deadline {
    fn new(_: &SolverConfig) -> Self {
        Deadline
    }
    fn expired(&self) -> bool {
        false
    }
}

/// Most fractional binary; ties go to the lowest index.
fn branching_variable(x: &[f64], binaries: &[usize]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for &j in binaries {
        let frac = abs(x[j] - round(x[j]));
        if frac == 0.0 {
            continue;
        }
        if best.is_none_or(|(_, f)| frac > f) {
            best = Some((j, frac));
        }
    }
    best
}

/// Re-solves with every binary fixed to its rounded value so the returned
/// point is exactly integral.
fn exact_integral(
    p: &MixedIntegerProgram,
    lower: &[f64],
    upper: &[f64],
    x: &[f64],
    binaries: &[usize],
    cfg: &SolverConfig,
) -> Result<Option<Relaxed>, SolverError> {
    let mut lo = lower.to_vec();
    let mut hi = upper.to_vec();
    for &j in binaries {
        let v = round(x[j]).clamp(0.0, 1.0);
        lo[j] = v;
        hi[j] = v;
    }
    solve_with_bounds(p, &lo, &hi, cfg)
}

/// Best-first branch-and-bound over the binary variables of `p`.
pub fn solve_mip(p: &MixedIntegerProgram, cfg: &SolverConfig) -> Result<SolveResult, SolverError> {
    p.validate()?;
    cfg.validate()?;
    let binaries = p.binaries();
    if binaries.is_empty() {
        return solve_relaxation(p, cfg);
    }
    let deadline = Deadline::new(cfg);
    let (lower, upper) = p.relaxed_bounds();

    let mut nodes = 1usize;
    let root = match solve_with_bounds(p, &lower, &upper, cfg)? {
        Some(r) => r,
        None => return Ok(SolveResult::infeasible(nodes)),
    };
    let mut heap = BinaryHeap::new();
    let mut incumbent: Option<Incumbent> = None;
    let mut next_id = 1usize;

    let consider = |node: Node, heap: &mut BinaryHeap<Node>, incumbent: &mut Option<Incumbent>| {
        let integral = binaries.iter().all(|&j| abs(node.x[j] - round(node.x[j])) <= INTEGRALITY_TOL);
        if integral {
            if let Some(exact) = exact_integral(p, &node.lower, &node.upper, &node.x, &binaries, cfg)? {
                if incumbent.as_ref().is_none_or(|inc| exact.objective < inc.objective) {
                    *incumbent = Some(Incumbent { x: exact.x, objective: exact.objective });
                }
                return Ok::<(), SolverError>(());
            }
        }
        heap.push(node);
        Ok(())
    };

    consider(Node { bound: root.objective, depth: 0, id: 0, lower, upper, x: root.x }, &mut heap, &mut incumbent)?;

    let mut status = SolveStatus::Optimal;
    while let Some(node) = heap.peek() {
        if let Some(inc) = &incumbent {
            if node.bound >= inc.objective - cfg.mip_gap_abs {
                break;
            }
        }
        if nodes >= cfg.max_nodes {
            status = SolveStatus::NodeLimit;
            break;
        }
        if deadline.expired() {
            status = SolveStatus::TimeLimit;
            break;
        }
        let node = heap.pop().expect("peeked");
        let Some((j, _)) = branching_variable(&node.x, &binaries) else {
            continue;
        };
        for value in [0.0, 1.0] {
            let mut lo = node.lower.clone();
            let mut hi = node.upper.clone();
            lo[j] = value;
            hi[j] = value;
            nodes += 1;
            if let Some(r) = solve_with_bounds(p, &lo, &hi, cfg)? {
                if incumbent.as_ref().is_some_and(|inc| r.objective >= inc.objective - cfg.mip_gap_abs) {
                    continue;
                }
                let child =
                    Node { bound: r.objective, depth: node.depth + 1, id: next_id, lower: lo, upper: hi, x: r.x };
                next_id += 1;
                consider(child, &mut heap, &mut incumbent)?;
            }
        }
    }

    let best_open = heap.peek().map_or(f64::INFINITY, |n| n.bound);
    match incumbent {
        None if status == SolveStatus::Optimal => Ok(SolveResult::infeasible(nodes)),
        None => Ok(SolveResult {
            status,
            x_star: Vec::new(),
            objective: f64::INFINITY,
            gap: f64::INFINITY,
            nodes_explored: nodes,
            binding_rows: Vec::new(),
        }),
        Some(inc) => Ok(SolveResult {
            status,
            binding_rows: p.binding_rows(&inc.x, cfg.feasibility_tol),
            gap: (inc.objective - best_open).max(0.0),
            objective: inc.objective,
            x_star: inc.x,
            nodes_explored: nodes,
        }),
    }
}

/// Enumerates every binary assignment and solves the continuous remainder of
/// each. Test oracle for [`solve_mip`].
pub fn brute_force_mip(p: &MixedIntegerProgram, cfg: &SolverConfig) -> Result<SolveResult, SolverError> {
    p.validate()?;
    cfg.validate()?;
    let binaries = p.binaries();
    if binaries.len() > MAX_BRUTE_FORCE_BINARIES {
        return Err(SolverError::TooManyBinaries(binaries.len()));
    }
    if binaries.is_empty() {
        return solve_relaxation(p, cfg);
    }
    let (lower, upper) = p.relaxed_bounds();
    let mut best: Option<Relaxed> = None;
    let total = 1usize << binaries.len();
    for mask in 0..total {
        let mut lo = lower.clone();
        let mut hi = upper.clone();
        for (bit, &j) in binaries.iter().enumerate() {
            let v = ((mask >> bit) & 1) as f64;
            lo[j] = v;
            hi[j] = v;
        }
        if let Some(r) = solve_with_bounds(p, &lo, &hi, cfg)? {
            if best.as_ref().is_none_or(|b| r.objective < b.objective) {
                best = Some(r);
            }
        }
    }
    Ok(match best {
        None => SolveResult::infeasible(total),
        Some(b) => SolveResult {
            status: SolveStatus::Optimal,
            binding_rows: p.binding_rows(&b.x, cfg.feasibility_tol),
            objective: b.objective,
            x_star: b.x,
            gap: 0.0,
            nodes_explored: total,
        },
    })
}
