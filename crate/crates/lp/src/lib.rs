//! Linear and mixed-binary linear programming.
//!
//! [`solve_lp`] runs a bounded-variable revised simplex; [`solve_milp`] wraps it in a
//! best-first branch-and-bound over `{0, 1}` variables. Both are deterministic: the same
//! input always produces bit-identical output.

mod factor;
mod milp;
mod problem;
mod simplex;

pub use milp::solve_milp;
pub use problem::{Constraint, LinearProgram, Relation};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: Status,
    /// Variable values; meaningful only when `status` is `Optimal`.
    pub x: Vec<f64>,
    pub objective_value: f64,
}

impl LpSolution {
    fn without_point(status: Status, n: usize) -> Self {
        let objective_value = match status {
            Status::Unbounded => f64::INFINITY,
            _ => f64::NEG_INFINITY,
        };
        LpSolution {
            status,
            x: vec![0.0; n],
            objective_value,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("malformed linear program: {0}")]
    Malformed(String),
    #[error("simplex iteration limit ({0}) reached")]
    IterationLimit(usize),
    #[error("basis could not be factorized")]
    SingularBasis,
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("branch-and-bound node limit ({0}) reached")]
    NodeLimit(usize),
}

/// Solves the continuous problem. Variables listed in `integrality` are relaxed to `[0, 1]`.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let bounds = milp::relaxed_bounds(lp);
    let out = simplex::solve(lp, &bounds, None)?;
    Ok(finish(lp, out.status, out.x))
}

fn finish(lp: &LinearProgram, status: Status, x: Vec<f64>) -> LpSolution {
    if status != Status::Optimal {
        return LpSolution::without_point(status, lp.num_variables());
    }
    LpSolution {
        status,
        objective_value: lp.objective_value(&x),
        x,
    }
}
