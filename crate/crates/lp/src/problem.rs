use std::io::{self, Write};

use crate::LpError;

/// Sense of a linear constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

/// A single row `a · x (<=|=|>=) rhs`, stored sparsely as `(variable, coefficient)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coefficients: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coefficients.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates this row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let act = self.activity(x);
        match self.relation {
            Relation::Le => (act - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - act).max(0.0),
            Relation::Eq => (act - self.rhs).abs(),
        }
    }
}

/// `maximize c·x` subject to linear rows, variable bounds and optional binary restrictions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<(f64, f64)>,
    /// Indices of variables restricted to `{0, 1}`.
    pub integrality: Vec<usize>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_variables(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Adds a continuous variable and returns its index.
    pub fn add_variable(&mut self, objective: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(objective);
        self.bounds.push((lower, upper));
        self.objective.len() - 1
    }

    /// Adds a `{0, 1}` variable and returns its index.
    pub fn add_binary(&mut self, objective: f64) -> usize {
        let j = self.add_variable(objective, 0.0, 1.0);
        self.integrality.push(j);
        j
    }

    pub fn add_constraint<I>(&mut self, coefficients: I, relation: Relation, rhs: f64) -> usize
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        self.constraints.push(Constraint {
            coefficients: coefficients.into_iter().collect(),
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest row or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self
            .constraints
            .iter()
            .map(|c| c.violation(x))
            .fold(0.0, f64::max);
        let bounds = self
            .bounds
            .iter()
            .zip(x)
            .map(|(&(lo, hi), &v)| (lo - v).max(v - hi).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.objective.len();
        if self.bounds.len() != n {
            return Err(LpError::Malformed(format!(
                "{} objective coefficients but {} bounds",
                n,
                self.bounds.len()
            )));
        }
        if let Some(j) = self.objective.iter().position(|c| !c.is_finite()) {
            return Err(LpError::Malformed(format!(
                "objective coefficient of x{j} is not finite"
            )));
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY
            {
                return Err(LpError::Malformed(format!(
                    "invalid bounds [{lo}, {hi}] on x{j}"
                )));
            }
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::Malformed(format!("rhs of row {i} is not finite")));
            }
            for &(j, a) in &row.coefficients {
                if j >= n {
                    return Err(LpError::Malformed(format!(
                        "row {i} references x{j} but there are only {n} variables"
                    )));
                }
                if !a.is_finite() {
                    return Err(LpError::Malformed(format!(
                        "row {i} has a non-finite coefficient on x{j}"
                    )));
                }
            }
        }
        if let Some(&j) = self.integrality.iter().find(|&&j| j >= n) {
            return Err(LpError::Malformed(format!(
                "integrality index {j} out of range"
            )));
        }
        Ok(())
    }

    /// Writes the problem in a line-oriented text format, one constraint per line.
    ///
    /// ```text
    /// maximize
    ///   obj: +2 x0 +1 x1
    /// subject to
    ///   c0: +1 x0 +1 x1 <= 4
    /// bounds
    ///   0 <= x0 <= inf
    /// binary
    ///   x2
    /// end
    /// ```
    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "maximize")?;
        write!(out, "  obj:")?;
        for (j, &c) in self.objective.iter().enumerate() {
            if c != 0.0 {
                write!(out, " {} x{j}", signed(c))?;
            }
        }
        writeln!(out)?;
        writeln!(out, "subject to")?;
        for (i, row) in self.constraints.iter().enumerate() {
            write!(out, "  c{i}:")?;
            for &(j, a) in &row.coefficients {
                write!(out, " {} x{j}", signed(a))?;
            }
            writeln!(out, " {} {}", row.relation.symbol(), row.rhs)?;
        }
        writeln!(out, "bounds")?;
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            writeln!(out, "  {} <= x{j} <= {}", fmt_bound(lo), fmt_bound(hi))?;
        }
        if !self.integrality.is_empty() {
            writeln!(out, "binary")?;
            for &j in &self.integrality {
                writeln!(out, "  x{j}")?;
            }
        }
        writeln!(out, "end")
    }
}

fn signed(v: f64) -> String {
    if v.is_sign_negative() {
        format!("{v}")
    } else {
        format!("+{v}")
    }
}

fn fmt_bound(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}
