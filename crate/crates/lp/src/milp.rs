//! Best-first branch-and-bound over binary variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::simplex::{self, WarmStart};
use crate::{finish, LinearProgram, LpError, LpSolution, Status};

const INT_TOL: f64 = 1e-6;
const NODE_LIMIT: usize = 100_000;

/// Bounds with every binary variable intersected with `[0, 1]`.
pub(crate) fn relaxed_bounds(lp: &LinearProgram) -> Vec<(f64, f64)> {
    let mut b = lp.bounds.clone();
    for &j in &lp.integrality {
        b[j] = (b[j].0.max(0.0), b[j].1.min(1.0));
    }
    b
}

struct Node {
    id: usize,
    depth: usize,
    bound: f64,
    bounds: Vec<(f64, f64)>,
    x: Vec<f64>,
    warm: Option<WarmStart>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: higher bound, then deeper, then older id pops first
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}

fn most_fractional(x: &[f64], integrality: &[usize]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    let mut sorted: Vec<usize> = integrality.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for j in sorted {
        let f = (x[j] - x[j].floor()).min(x[j].ceil() - x[j]);
        if f > INT_TOL && best.is_none_or(|(_, bf)| f > bf) {
            best = Some((j, f));
        }
    }
    best.map(|(j, _)| j)
}

/// Solves the problem honoring `integrality`. Returns an optimal solution with every binary
/// exactly 0 or 1, or `Infeasible` / `Unbounded` when the relaxation says so.
pub fn solve_milp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let root_bounds = relaxed_bounds(lp);
    let root = simplex::solve(lp, &root_bounds, None)?;
    match root.status {
        Status::Optimal => {}
        s => return Ok(finish(lp, s, Vec::new())),
    }
    if lp.integrality.is_empty() {
        return Ok(finish(lp, Status::Optimal, root.x));
    }

    let mut heap = BinaryHeap::new();
    let mut next_id = 0;
    heap.push(Node {
        id: next_id,
        depth: 0,
        bound: lp.objective_value(&root.x),
        bounds: root_bounds,
        x: root.x,
        warm: root.warm,
    });
    next_id += 1;

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut explored = 0;
    while let Some(node) = heap.pop() {
        if let Some((best, _)) = &incumbent {
            if node.bound <= *best + prune_gap(*best) {
                continue;
            }
        }
        explored += 1;
        if explored > NODE_LIMIT {
            return Err(LpError::NodeLimit(NODE_LIMIT));
        }
        let Some(j) = most_fractional(&node.x, &lp.integrality) else {
            let mut x = node.x;
            for &k in &lp.integrality {
                x[k] = x[k].round();
            }
            let value = lp.objective_value(&x);
            if incumbent.as_ref().is_none_or(|(best, _)| value > *best) {
                incumbent = Some((value, x));
            }
            continue;
        };
        for fixed in [0.0, 1.0] {
            let mut bounds = node.bounds.clone();
            bounds[j] = (fixed, fixed);
            let out = simplex::solve(lp, &bounds, node.warm.as_ref())?;
            if out.status != Status::Optimal {
                continue;
            }
            let bound = lp.objective_value(&out.x);
            if let Some((best, _)) = &incumbent {
                if bound <= *best + prune_gap(*best) {
                    continue;
                }
            }
            heap.push(Node {
                id: next_id,
                depth: node.depth + 1,
                bound,
                bounds,
                x: out.x,
                warm: out.warm,
            });
            next_id += 1;
        }
    }
    match incumbent {
        Some((_, x)) => Ok(finish(lp, Status::Optimal, x)),
        None => Ok(finish(lp, Status::Infeasible, Vec::new())),
    }
}

fn prune_gap(best: f64) -> f64 {
    1e-9 * best.abs().max(1.0)
}
