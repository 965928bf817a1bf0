//! Policy training: maximize historical profit over the q-vectors subject to the plant's
//! hourly boxes and the daily hydrogen quota.

use h2bid_lp::{solve_lp, solve_milp, LinearProgram, Relation, Status};

use crate::data_io::DatasetRow;
use crate::error::{Error, Result};
use crate::features::{row_context, FeatureSchema, ForecastModel};
use crate::policy::{evaluate_raw, Architecture, PolicySet, Product, TrainingMeta};
use crate::types::{day_of, hydrogen_value, MarketHour, PlantParams, ProfitTerms};

/// Whole days of realized market data with the matching context features.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingWindow {
    pub hours: Vec<MarketHour>,
    pub contexts: Vec<Vec<f64>>,
}

impl TrainingWindow {
    pub fn new(hours: Vec<MarketHour>, contexts: Vec<Vec<f64>>) -> Result<Self> {
        let w = TrainingWindow { hours, contexts };
        w.check()?;
        Ok(w)
    }

    pub fn from_rows(
        rows: &[DatasetRow],
        schema: &FeatureSchema,
        fm: Option<&ForecastModel>,
        params: &PlantParams,
    ) -> Result<Self> {
        let contexts = rows
            .iter()
            .map(|r| row_context(r, schema, fm, params.wind_capacity))
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows.iter().map(|r| r.market).collect(), contexts)
    }

    fn check(&self) -> Result<()> {
        if self.hours.is_empty() {
            return Err(Error::InsufficientData("empty training window".into()));
        }
        if !self.hours.len().is_multiple_of(24) || !self.hours[0].t.is_multiple_of(24) {
            return Err(Error::InvalidInput(
                "training window must cover whole days starting at hour 0".into(),
            ));
        }
        if self.contexts.len() != self.hours.len() {
            return Err(Error::InvalidInput(format!(
                "{} hours but {} contexts",
                self.hours.len(),
                self.contexts.len()
            )));
        }
        let t0 = self.hours[0].t;
        for (i, h) in self.hours.iter().enumerate() {
            if h.t != t0 + i {
                return Err(Error::InvalidInput(format!(
                    "training hours not contiguous at position {i} (t = {})",
                    h.t
                )));
            }
            if !(h.lambda_up <= h.lambda_da && h.lambda_da <= h.lambda_dw) {
                return Err(Error::InvalidHour {
                    t: h.t,
                    msg: "dual pricing violated".into(),
                });
            }
        }
        Ok(())
    }

    pub fn days(&self) -> usize {
        self.hours.len() / 24
    }

    pub fn first_day(&self) -> usize {
        day_of(self.hours[0].t)
    }

    fn strict_dual_pricing(&self) -> bool {
        self.hours.iter().all(MarketHour::strict_dual_pricing)
    }
}

/// How the over/under-production split is modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    /// Relaxation when every hour has `lambda_up < lambda_dw`, MILP otherwise.
    Auto,
    /// Binary indicator per hour with big-M rows.
    Milp,
    /// Indicators and big-M rows dropped.
    Relaxed,
}

/// An assembled training problem and its variable layout.
#[derive(Debug, Clone)]
pub struct TrainingProblem {
    pub lp: LinearProgram,
    pub architecture: Architecture,
    /// Feature dimension N.
    pub dimension: usize,
    pub hours: usize,
    /// Whether hour-level binaries are present.
    pub with_binaries: bool,
}

impl TrainingProblem {
    pub fn num_policy_vars(&self) -> usize {
        self.architecture.keys().len() * self.dimension
    }

    fn stride(&self) -> usize {
        if self.with_binaries {
            3
        } else {
            2
        }
    }

    pub fn over_var(&self, i: usize) -> usize {
        self.num_policy_vars() + self.stride() * i
    }

    pub fn under_var(&self, i: usize) -> usize {
        self.over_var(i) + 1
    }

    pub fn binary_var(&self, i: usize) -> Option<usize> {
        self.with_binaries.then(|| self.over_var(i) + 2)
    }

    /// Coefficient vectors in canonical key order.
    pub fn policies(&self, x: &[f64]) -> Vec<Vec<f64>> {
        x[..self.num_policy_vars()]
            .chunks(self.dimension)
            .map(<[f64]>::to_vec)
            .collect()
    }
}

/// Builds the mixed-binary training problem.
pub fn build_training_problem(
    window: &TrainingWindow,
    arch: &Architecture,
    schema: &FeatureSchema,
    params: &PlantParams,
) -> Result<TrainingProblem> {
    build(window, arch, schema, params, true)
}

/// Builds the continuous version without indicators or big-M rows.
pub fn build_relaxed_problem(
    window: &TrainingWindow,
    arch: &Architecture,
    schema: &FeatureSchema,
    params: &PlantParams,
) -> Result<TrainingProblem> {
    build(window, arch, schema, params, false)
}

fn build(
    window: &TrainingWindow,
    arch: &Architecture,
    schema: &FeatureSchema,
    params: &PlantParams,
    with_binaries: bool,
) -> Result<TrainingProblem> {
    window.check()?;
    for c in &window.contexts {
        schema.check_context(c)?;
    }
    let n = schema.dimension();
    let hours = window.hours.len();
    let hv = hydrogen_value(params);
    let big_m = params.big_m();

    let mut lp = LinearProgram::new();
    let nq = arch.keys().len() * n;
    for _ in 0..nq {
        lp.add_variable(0.0, f64::NEG_INFINITY, f64::INFINITY);
    }
    for h in &window.hours {
        lp.add_variable(h.lambda_up, 0.0, f64::INFINITY);
        lp.add_variable(-h.lambda_dw, 0.0, f64::INFINITY);
        if with_binaries {
            lp.add_binary(0.0);
        }
    }
    let problem = TrainingProblem {
        lp,
        architecture: arch.clone(),
        dimension: n,
        hours,
        with_binaries,
    };
    let mut lp = problem.lp.clone();

    // q · X_t for each product and hour, as sparse terms over the policy variables
    let terms = |product: Product, i: usize| -> Vec<(usize, f64)> {
        let h = &window.hours[i];
        let base = arch.key_index(product, h.t, h.lambda_da) * n;
        let mut x = window.contexts[i].clone();
        x.push(h.lambda_da);
        x.push(1.0);
        x.into_iter()
            .enumerate()
            .filter(|&(_, v)| v != 0.0)
            .map(|(j, v)| (base + j, v))
            .collect()
    };

    for (i, h) in window.hours.iter().enumerate() {
        for (j, v) in terms(Product::DA, i) {
            lp.objective[j] += h.lambda_da * v;
        }
        for (j, v) in terms(Product::H, i) {
            lp.objective[j] += hv * v;
        }
    }

    // imbalance definition: q_DA X + q_H X + o - u = P^W
    for (i, h) in window.hours.iter().enumerate() {
        let mut row = terms(Product::DA, i);
        row.extend(terms(Product::H, i));
        row.push((problem.over_var(i), 1.0));
        row.push((problem.under_var(i), -1.0));
        lp.add_constraint(row, Relation::Eq, h.wind_actual);
    }
    if with_binaries {
        for i in 0..hours {
            let b = problem.binary_var(i).expect("binary present");
            lp.add_constraint([(problem.over_var(i), 1.0), (b, big_m)], Relation::Le, big_m);
            lp.add_constraint([(problem.under_var(i), 1.0), (b, -big_m)], Relation::Le, 0.0);
        }
    }
    for i in 0..hours {
        let h_terms = terms(Product::H, i);
        let da_terms = terms(Product::DA, i);
        lp.add_constraint(h_terms.clone(), Relation::Ge, 0.0);
        lp.add_constraint(h_terms, Relation::Le, params.electrolyzer_capacity);
        lp.add_constraint(da_terms.clone(), Relation::Ge, -params.electrolyzer_capacity);
        lp.add_constraint(da_terms, Relation::Le, params.wind_capacity);
    }
    for d in 0..window.days() {
        let mut row = Vec::new();
        for i in 24 * d..24 * (d + 1) {
            row.extend(
                terms(Product::H, i)
                    .into_iter()
                    .map(|(j, v)| (j, params.efficiency * v)),
            );
        }
        lp.add_constraint(row, Relation::Ge, params.daily_quota);
    }
    Ok(TrainingProblem { lp, ..problem })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    /// Profit of the extracted policies over the window, recomputed term by term, €.
    pub objective: f64,
    /// Objective value reported by the solver, €.
    pub solver_objective: f64,
    pub status: Status,
    pub terms: ProfitTerms,
    /// True when the continuous version was solved.
    pub relaxed: bool,
    pub variables: usize,
    pub constraints: usize,
}

/// Trains with [`SolveMode::Auto`].
pub fn train(
    window: &TrainingWindow,
    arch: &Architecture,
    schema: &FeatureSchema,
    params: &PlantParams,
) -> Result<(PolicySet, TrainingReport)> {
    train_with_mode(window, arch, schema, params, SolveMode::Auto)
}

pub fn train_with_mode(
    window: &TrainingWindow,
    arch: &Architecture,
    schema: &FeatureSchema,
    params: &PlantParams,
    mode: SolveMode,
) -> Result<(PolicySet, TrainingReport)> {
    let relaxed = match mode {
        SolveMode::Auto => window.strict_dual_pricing(),
        SolveMode::Milp => false,
        SolveMode::Relaxed => true,
    };
    let problem = if relaxed {
        build_relaxed_problem(window, arch, schema, params)?
    } else {
        build_training_problem(window, arch, schema, params)?
    };
    let sol = if relaxed {
        solve_lp(&problem.lp)?
    } else {
        solve_milp(&problem.lp)?
    };
    match sol.status {
        Status::Optimal => {}
        Status::Infeasible => {
            return Err(Error::Infeasible(
                "training problem has no feasible policy; the quota should always be reachable".into(),
            ))
        }
        Status::Unbounded => {
            return Err(Error::Infeasible("training problem reported unbounded".into()));
        }
    }
    let ps = PolicySet::new(
        schema.clone(),
        arch.clone(),
        problem.policies(&sol.x),
        None,
        TrainingMeta {
            first_day: window.first_day(),
            days: window.days(),
            objective: 0.0,
        },
    )?;
    let terms = replay_terms(&ps, window, params)?;
    let objective = terms.total();
    let ps = PolicySet {
        meta: TrainingMeta {
            objective,
            ..ps.meta
        },
        ..ps
    };
    let report = TrainingReport {
        objective,
        solver_objective: sol.objective_value,
        status: sol.status,
        terms,
        relaxed,
        variables: problem.lp.num_variables(),
        constraints: problem.lp.num_constraints(),
    };
    Ok((ps, report))
}

/// Policy outputs on the training window, keyed by realized prices.
pub fn replay(ps: &PolicySet, window: &TrainingWindow) -> Result<Vec<(f64, f64)>> {
    window
        .hours
        .iter()
        .zip(&window.contexts)
        .map(|(h, c)| evaluate_raw(ps, h.t, h.lambda_da, c))
        .collect()
}

/// Profit terms of the replayed policies with the imbalance split into its positive and
/// negative parts.
pub fn replay_terms(ps: &PolicySet, window: &TrainingWindow, params: &PlantParams) -> Result<ProfitTerms> {
    let hv = hydrogen_value(params);
    Ok(replay(ps, window)?
        .into_iter()
        .zip(&window.hours)
        .map(|((da, h), m)| {
            let imbalance = m.wind_actual - da - h;
            ProfitTerms {
                da: m.lambda_da * da,
                hydrogen: hv * h,
                up: m.lambda_up * imbalance.max(0.0),
                down: m.lambda_dw * (-imbalance).max(0.0),
            }
        })
        .sum())
}
