//! Bounded-variable primal revised simplex.
//!
//! Internal form: every row `i` gets a logical column `-e_i` whose bounds are the row bounds,
//! so all rows read `A x - s = 0`. The problem is scaled by powers of two, minimized, and solved
//! with a composite phase 1 (minimize the sum of bound violations of basic variables) followed
//! by phase 2. Pricing is Dantzig with lowest-index tie-breaking, the ratio test is Harris
//! two-pass, and after 1000 consecutive degenerate pivots Bland's rule takes over until the
//! objective moves again.

use crate::factor::{Csc, Factor};
use crate::problem::{LinearProgram, Relation};
use crate::{LpError, Status};

const FEAS_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIV_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 32;
const BLAND_AFTER: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    Free,
}

/// Final variable statuses, reusable as a starting point after bound changes.
#[derive(Debug, Clone)]
pub(crate) struct WarmStart {
    status: Vec<VarStatus>,
}

#[derive(Debug)]
pub(crate) struct Outcome {
    pub status: Status,
    pub x: Vec<f64>,
    pub warm: Option<WarmStart>,
}

/// Product-form updates since the last refactorization, stored back to back.
#[derive(Default)]
struct EtaFile {
    pos: Vec<usize>,
    pivot: Vec<f64>,
    start: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
}

impl EtaFile {
    fn len(&self) -> usize {
        self.pos.len()
    }

    fn clear(&mut self) {
        self.pos.clear();
        self.pivot.clear();
        self.start.clear();
        self.idx.clear();
        self.val.clear();
    }

    fn push(&mut self, pos: usize, alpha: &[f64], nz: &[usize]) {
        self.pos.push(pos);
        self.pivot.push(alpha[pos]);
        self.start.push(self.idx.len());
        for &i in nz {
            let a = alpha[i];
            if i != pos && a.abs() > 1e-14 {
                self.idx.push(i);
                self.val.push(a);
            }
        }
    }

    fn entries(&self, k: usize) -> (&[usize], &[f64]) {
        let s = self.start[k];
        let e = self.start.get(k + 1).copied().unwrap_or(self.idx.len());
        (&self.idx[s..e], &self.val[s..e])
    }

    fn apply(&self, x: &mut [f64]) {
        for k in 0..self.len() {
            let p = self.pos[k];
            let xp = x[p] / self.pivot[k];
            x[p] = xp;
            if xp != 0.0 {
                let (idx, val) = self.entries(k);
                for (&i, &a) in idx.iter().zip(val) {
                    x[i] -= a * xp;
                }
            }
        }
    }

    fn apply_transpose(&self, c: &mut [f64]) {
        for k in (0..self.len()).rev() {
            let p = self.pos[k];
            let (idx, val) = self.entries(k);
            let mut s = c[p];
            for (&i, &a) in idx.iter().zip(val) {
                s -= a * c[i];
            }
            c[p] = s / self.pivot[k];
        }
    }
}

enum Ratio {
    Unbounded,
    Flip,
    Pivot { pos: usize, theta: f64, to_upper: bool },
}

struct Simplex {
    m: usize,
    a: Csc,
    col_scale: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    status: Vec<VarStatus>,
    basis: Vec<usize>,
    factor: Option<Factor>,
    /// Basis the current factor was built from; etas account for later changes.
    factor_basis: Vec<usize>,
    etas: EtaFile,
    /// Scratch: row-indexed right-hand side, basic costs, duals and the entering column.
    work: Vec<f64>,
    cb: Vec<f64>,
    y: Vec<f64>,
    alpha: Vec<f64>,
    /// Nonzero positions of `alpha`, ascending.
    nz: Vec<usize>,
    bland: bool,
    degenerate_run: usize,
}

fn pow2(s: f64) -> f64 {
    if !s.is_finite() || s <= 0.0 {
        1.0
    } else {
        2f64.powi(s.log2().round() as i32)
    }
}

/// Geometric-mean row/column scaling on the structural block, rounded to powers of two.
fn scale_factors(m: usize, n: usize, trip: &[(usize, usize, f64)]) -> (Vec<f64>, Vec<f64>) {
    let mut rs = vec![1.0; m];
    let mut cs = vec![1.0; n];
    for _ in 0..4 {
        let mut rmax = vec![0.0f64; m];
        let mut rmin = vec![f64::INFINITY; m];
        for &(i, j, v) in trip {
            let a = v.abs() * cs[j];
            rmax[i] = rmax[i].max(a);
            rmin[i] = rmin[i].min(a);
        }
        for i in 0..m {
            if rmax[i] > 0.0 {
                rs[i] = pow2(1.0 / (rmax[i] * rmin[i]).sqrt());
            }
        }
        let mut cmax = vec![0.0f64; n];
        let mut cmin = vec![f64::INFINITY; n];
        for &(i, j, v) in trip {
            let a = v.abs() * rs[i];
            cmax[j] = cmax[j].max(a);
            cmin[j] = cmin[j].min(a);
        }
        for j in 0..n {
            if cmax[j] > 0.0 {
                cs[j] = pow2(1.0 / (cmax[j] * cmin[j]).sqrt());
            }
        }
    }
    (rs, cs)
}

impl Simplex {
    fn new(lp: &LinearProgram, bounds: &[(f64, f64)]) -> Self {
        let n = lp.num_variables();
        let m = lp.num_constraints();
        let mut trip: Vec<(usize, usize, f64)> = Vec::new();
        for (i, row) in lp.constraints.iter().enumerate() {
            for &(j, v) in &row.coefficients {
                if v != 0.0 {
                    trip.push((i, j, v));
                }
            }
        }
        let (rs, cs) = scale_factors(m, n, &trip);
        // bucket by column; rows stay ascending within a column
        let mut start = vec![0usize; n + 1];
        for &(_, j, _) in &trip {
            start[j + 1] += 1;
        }
        for j in 0..n {
            start[j + 1] += start[j];
        }
        let mut fill = start.clone();
        let mut order = vec![0usize; trip.len()];
        for (t, &(_, j, _)) in trip.iter().enumerate() {
            order[fill[j]] = t;
            fill[j] += 1;
        }
        let mut col_start = Vec::with_capacity(n + m + 1);
        let mut rows = Vec::with_capacity(trip.len() + m);
        let mut vals = Vec::with_capacity(trip.len() + m);
        col_start.push(0);
        for j in 0..n {
            for &t in &order[start[j]..start[j + 1]] {
                let (i, _, v) = trip[t];
                let sv = v * rs[i] * cs[j];
                if rows.len() > col_start[j] && *rows.last().unwrap() == i {
                    *vals.last_mut().unwrap() += sv;
                } else {
                    rows.push(i);
                    vals.push(sv);
                }
            }
            col_start.push(rows.len());
        }
        for i in 0..m {
            rows.push(i);
            vals.push(-1.0);
            col_start.push(rows.len());
        }
        let a = Csc {
            nrows: m,
            col_start,
            rows,
            vals,
        };

        let total = n + m;
        let mut lower = Vec::with_capacity(total);
        let mut upper = Vec::with_capacity(total);
        for j in 0..n {
            let (lo, hi) = bounds[j];
            lower.push(lo / cs[j]);
            upper.push(hi / cs[j]);
        }
        for (i, row) in lp.constraints.iter().enumerate() {
            let b = row.rhs * rs[i];
            let (lo, hi) = match row.relation {
                Relation::Le => (f64::NEG_INFINITY, b),
                Relation::Ge => (b, f64::INFINITY),
                Relation::Eq => (b, b),
            };
            lower.push(lo);
            upper.push(hi);
        }
        let mut cost = vec![0.0; total];
        let mut cmax = 0.0f64;
        for j in 0..n {
            cost[j] = -lp.objective[j] * cs[j];
            cmax = cmax.max(cost[j].abs());
        }
        let cscale = if cmax > 0.0 { pow2(1.0 / cmax) } else { 1.0 };
        for c in cost.iter_mut() {
            *c *= cscale;
        }

        Simplex {
            m,
            a,
            col_scale: cs,
            lower,
            upper,
            cost,
            x: vec![0.0; total],
            status: vec![VarStatus::AtLower; total],
            basis: Vec::new(),
            factor: None,
            factor_basis: Vec::new(),
            etas: EtaFile::default(),
            work: vec![0.0; m],
            cb: vec![0.0; m],
            y: vec![0.0; m],
            alpha: vec![0.0; m],
            nz: Vec::with_capacity(m),
            bland: false,
            degenerate_run: 0,
        }
    }

    fn n_struct(&self) -> usize {
        self.col_scale.len()
    }

    fn nonbasic_status(&self, j: usize) -> VarStatus {
        if self.lower[j].is_finite() {
            VarStatus::AtLower
        } else if self.upper[j].is_finite() {
            VarStatus::AtUpper
        } else {
            VarStatus::Free
        }
    }

    fn place_nonbasic(&mut self, j: usize, st: VarStatus) {
        let st = match st {
            VarStatus::AtLower if self.lower[j].is_finite() => VarStatus::AtLower,
            VarStatus::AtUpper if self.upper[j].is_finite() => VarStatus::AtUpper,
            _ => self.nonbasic_status(j),
        };
        self.status[j] = st;
        self.x[j] = match st {
            VarStatus::AtLower => self.lower[j],
            VarStatus::AtUpper => self.upper[j],
            _ => 0.0,
        };
    }

    /// Slack basis, with structural column singletons crashed in for rows whose logical
    /// would otherwise start outside its bounds.
    fn cold_start(&mut self) {
        let n = self.n_struct();
        let m = self.m;
        for j in 0..n {
            self.place_nonbasic(j, VarStatus::AtLower);
        }
        let mut activity = vec![0.0; m];
        for j in 0..n {
            let xj = self.x[j];
            if xj != 0.0 {
                let (rows, vals) = self.a.col(j);
                for (&r, &v) in rows.iter().zip(vals) {
                    activity[r] += v * xj;
                }
            }
        }
        let mut singleton_in_row: Vec<Option<usize>> = vec![None; m];
        for j in 0..n {
            let (rows, _) = self.a.col(j);
            if rows.len() == 1 && singleton_in_row[rows[0]].is_none() {
                singleton_in_row[rows[0]] = Some(j);
            }
        }
        self.basis = Vec::with_capacity(m);
        for i in 0..m {
            let s = n + i;
            let act = activity[i];
            let inside = act >= self.lower[s] - FEAS_TOL && act <= self.upper[s] + FEAS_TOL;
            let mut crashed = false;
            if !inside {
                if let Some(j) = singleton_in_row[i] {
                    let target = if act < self.lower[s] { self.lower[s] } else { self.upper[s] };
                    let coef = self.a.col(j).1[0];
                    let need = self.x[j] + (target - act) / coef;
                    if need >= self.lower[j] - FEAS_TOL && need <= self.upper[j] + FEAS_TOL {
                        self.status[j] = VarStatus::Basic;
                        self.basis.push(j);
                        self.place_nonbasic(
                            s,
                            if act < self.lower[s] {
                                VarStatus::AtLower
                            } else {
                                VarStatus::AtUpper
                            },
                        );
                        crashed = true;
                    }
                }
            }
            if !crashed {
                self.status[s] = VarStatus::Basic;
                self.basis.push(s);
            }
        }
    }

    fn warm_start(&mut self, warm: &WarmStart) {
        let total = self.x.len();
        self.basis.clear();
        for j in 0..total {
            match warm.status[j] {
                VarStatus::Basic => {
                    self.status[j] = VarStatus::Basic;
                    self.basis.push(j);
                }
                st => self.place_nonbasic(j, st),
            }
        }
        debug_assert_eq!(self.basis.len(), self.m);
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        self.etas.clear();
        for _attempt in 0..4 {
            match Factor::new(&self.a, &self.basis) {
                Ok(f) => {
                    self.factor = Some(f);
                    self.factor_basis.clone_from(&self.basis);
                    return Ok(());
                }
                Err(sing) => {
                    let n = self.n_struct();
                    for (&p, &r) in sing.dependent.iter().zip(&sing.uncovered) {
                        let out = self.basis[p];
                        let st = if self.x[out] >= self.upper[out] && self.upper[out].is_finite() {
                            VarStatus::AtUpper
                        } else {
                            VarStatus::AtLower
                        };
                        self.place_nonbasic(out, st);
                        let s = n + r;
                        self.status[s] = VarStatus::Basic;
                        self.basis[p] = s;
                    }
                }
            }
        }
        Err(LpError::SingularBasis)
    }

    /// Leaves `B^-1 a_j` in `alpha`.
    fn ftran_col(&mut self, j: usize) {
        self.work.fill(0.0);
        let (rows, vals) = self.a.col(j);
        for (&r, &v) in rows.iter().zip(vals) {
            self.work[r] = v;
        }
        let mut out = std::mem::take(&mut self.alpha);
        self.ftran_work(&mut out);
        self.nz.clear();
        self.nz.extend((0..out.len()).filter(|&p| out[p] != 0.0));
        self.alpha = out;
    }

    /// Solves `B x = work`, clobbering `work`.
    fn ftran_work(&mut self, x: &mut [f64]) {
        let f = self.factor.as_ref().expect("factorized");
        f.ftran(&self.a, &self.factor_basis, &mut self.work, x);
        self.etas.apply(x);
    }

    /// Solves `B^T y = cb` into `y`, clobbering `cb`.
    fn btran(&mut self) {
        let c = &mut self.cb;
        self.etas.apply_transpose(c);
        let f = self.factor.as_ref().expect("factorized");
        f.btran(&self.a, &self.factor_basis, c, &mut self.y);
    }

    /// Recomputes basic values from the nonbasic ones (`B x_B = -N x_N`).
    fn compute_basics(&mut self) {
        let mut w = std::mem::take(&mut self.work);
        w.fill(0.0);
        for j in 0..self.x.len() {
            if self.status[j] != VarStatus::Basic {
                let xj = self.x[j];
                if xj != 0.0 {
                    let (rows, vals) = self.a.col(j);
                    for (&r, &v) in rows.iter().zip(vals) {
                        w[r] -= v * xj;
                    }
                }
            }
        }
        self.work = w;
        let mut xb = vec![0.0; self.m];
        self.ftran_work(&mut xb);
        for (p, &j) in self.basis.iter().enumerate() {
            self.x[j] = xb[p];
        }
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        if v < self.lower[j] - FEAS_TOL {
            self.lower[j] - v
        } else if v > self.upper[j] + FEAS_TOL {
            v - self.upper[j]
        } else {
            0.0
        }
    }

    /// Fills `cb` with the basic costs of the current phase; true in phase 1.
    fn load_costs(&mut self) -> bool {
        let mut any = false;
        for (p, &j) in self.basis.iter().enumerate() {
            let v = self.x[j];
            self.cb[p] = if v < self.lower[j] - FEAS_TOL {
                any = true;
                -1.0
            } else if v > self.upper[j] + FEAS_TOL {
                any = true;
                1.0
            } else {
                0.0
            };
        }
        if !any {
            for (p, &j) in self.basis.iter().enumerate() {
                self.cb[p] = self.cost[j];
            }
        }
        any
    }

    /// Picks the entering variable and its direction of motion.
    fn price(&self, y: &[f64], phase_one: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        let cols = self.status.iter().zip(&self.lower).zip(&self.upper).zip(&self.cost);
        for (j, (((&st, lo), hi), &c)) in cols.enumerate() {
            if st == VarStatus::Basic || lo == hi {
                continue;
            }
            let cj = if phase_one { 0.0 } else { c };
            let d = cj - self.a.dot(j, y);
            let dir = match st {
                VarStatus::AtLower if d < -DUAL_TOL => 1.0,
                VarStatus::AtUpper if d > DUAL_TOL => -1.0,
                VarStatus::Free if d.abs() > DUAL_TOL => -d.signum(),
                _ => continue,
            };
            if self.bland {
                return Some((j, dir));
            }
            if d.abs() > best_score {
                best_score = d.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    /// Step limit imposed by basic variable `j` moving at `rate`; `slack` relaxes the bound
    /// (Harris pass 1). Returns the limit and whether the bound hit is the upper one.
    fn limit(&self, j: usize, rate: f64, slack: f64) -> Option<(f64, bool)> {
        let (v, lo, hi) = (self.x[j], self.lower[j], self.upper[j]);
        if rate < 0.0 {
            if v > hi + FEAS_TOL {
                Some(((v - hi) / -rate, true))
            } else if v >= lo - FEAS_TOL && lo.is_finite() {
                Some(((v - lo + slack) / -rate, false))
            } else {
                None
            }
        } else if v < lo - FEAS_TOL {
            Some(((lo - v) / rate, false))
        } else if v <= hi + FEAS_TOL && hi.is_finite() {
            Some(((hi - v + slack) / rate, true))
        } else {
            None
        }
    }

    fn ratio_test(&self, q: usize, dir: f64, alpha: &[f64], nz: &[usize]) -> Ratio {
        let flip = if self.lower[q].is_finite() && self.upper[q].is_finite() {
            self.upper[q] - self.lower[q]
        } else {
            f64::INFINITY
        };
        if self.bland {
            let mut best: Option<(usize, f64, bool)> = None;
            for &p in nz {
                let a = alpha[p];
                if a.abs() < PIV_TOL {
                    continue;
                }
                let j = self.basis[p];
                if let Some((t, up)) = self.limit(j, -dir * a, 0.0) {
                    let better = match best {
                        None => true,
                        Some((bp, bt, _)) => {
                            t < bt - 1e-12 || (t <= bt + 1e-12 && j < self.basis[bp])
                        }
                    };
                    if better {
                        best = Some((p, t, up));
                    }
                }
            }
            return match best {
                Some((_, t, _)) if flip <= t => Ratio::Flip,
                Some((pos, t, to_upper)) => Ratio::Pivot {
                    pos,
                    theta: t.max(0.0),
                    to_upper,
                },
                None if flip.is_finite() => Ratio::Flip,
                None => Ratio::Unbounded,
            };
        }

        let mut theta_max = f64::INFINITY;
        for &p in nz {
            let a = alpha[p];
            if a.abs() < PIV_TOL {
                continue;
            }
            if let Some((t, _)) = self.limit(self.basis[p], -dir * a, FEAS_TOL) {
                theta_max = theta_max.min(t);
            }
        }
        if flip <= theta_max {
            return if flip.is_finite() {
                Ratio::Flip
            } else {
                Ratio::Unbounded
            };
        }
        let mut best: Option<(usize, f64, bool)> = None;
        let mut best_abs = 0.0;
        for &p in nz {
            let a = alpha[p];
            if a.abs() < PIV_TOL {
                continue;
            }
            if let Some((t, up)) = self.limit(self.basis[p], -dir * a, 0.0) {
                if t <= theta_max && a.abs() > best_abs {
                    best_abs = a.abs();
                    best = Some((p, t, up));
                }
            }
        }
        match best {
            Some((pos, t, to_upper)) => Ratio::Pivot {
                pos,
                theta: t.max(0.0),
                to_upper,
            },
            None => Ratio::Unbounded,
        }
    }

    fn note_progress(&mut self, step: f64) {
        if step > 1e-12 {
            self.degenerate_run = 0;
            self.bland = false;
        } else {
            self.degenerate_run += 1;
            if self.degenerate_run > BLAND_AFTER {
                self.bland = true;
            }
        }
    }

    fn run(&mut self, max_iter: usize) -> Result<Status, LpError> {
        self.refactor()?;
        self.compute_basics();
        let mut verified = false;
        for _ in 0..max_iter {
            if self.etas.len() >= REFACTOR_EVERY {
                self.refactor()?;
                self.compute_basics();
            }
            let phase_one = self.load_costs();
            self.btran();
            let Some((q, dir)) = self.price(&self.y, phase_one) else {
                if !verified {
                    // rebuild from scratch before trusting the verdict
                    self.refactor()?;
                    self.compute_basics();
                    verified = true;
                    continue;
                }
                return Ok(if phase_one {
                    Status::Infeasible
                } else {
                    Status::Optimal
                });
            };
            verified = false;
            self.ftran_col(q);
            let alpha = std::mem::take(&mut self.alpha);
            let nz = std::mem::take(&mut self.nz);
            let ratio = self.ratio_test(q, dir, &alpha, &nz);
            match ratio {
                Ratio::Unbounded => {
                    if phase_one {
                        return Err(LpError::Numerical(
                            "unbounded ray while minimizing infeasibility".into(),
                        ));
                    }
                    return Ok(Status::Unbounded);
                }
                Ratio::Flip => {
                    let step = self.upper[q] - self.lower[q];
                    for &p in &nz {
                        self.x[self.basis[p]] -= dir * step * alpha[p];
                    }
                    if dir > 0.0 {
                        self.status[q] = VarStatus::AtUpper;
                        self.x[q] = self.upper[q];
                    } else {
                        self.status[q] = VarStatus::AtLower;
                        self.x[q] = self.lower[q];
                    }
                    self.note_progress(step);
                }
                Ratio::Pivot {
                    pos,
                    theta,
                    to_upper,
                } => {
                    for &p in &nz {
                        self.x[self.basis[p]] -= dir * theta * alpha[p];
                    }
                    self.x[q] += dir * theta;
                    let out = self.basis[pos];
                    if to_upper {
                        self.status[out] = VarStatus::AtUpper;
                        self.x[out] = self.upper[out];
                    } else {
                        self.status[out] = VarStatus::AtLower;
                        self.x[out] = self.lower[out];
                    }
                    self.status[q] = VarStatus::Basic;
                    self.basis[pos] = q;
                    self.etas.push(pos, &alpha, &nz);
                    self.note_progress(theta * alpha[pos].abs());
                }
            }
            self.alpha = alpha;
            self.nz = nz;
        }
        Err(LpError::IterationLimit(max_iter))
    }

    fn max_primal_infeasibility(&self) -> f64 {
        (0..self.x.len())
            .map(|j| self.infeasibility(j))
            .fold(0.0, f64::max)
    }

    fn structural_solution(&self) -> Vec<f64> {
        (0..self.n_struct())
            .map(|j| self.x[j] * self.col_scale[j])
            .collect()
    }
}

/// Solves the continuous problem with the given bounds (which replace `lp.bounds`).
pub(crate) fn solve(
    lp: &LinearProgram,
    bounds: &[(f64, f64)],
    warm: Option<&WarmStart>,
) -> Result<Outcome, LpError> {
    let mut sx = Simplex::new(lp, bounds);
    match warm {
        Some(w) if w.status.len() == sx.x.len() => sx.warm_start(w),
        _ => sx.cold_start(),
    }
    let max_iter = 20 * (sx.x.len() + sx.m) + 10_000;
    let status = sx.run(max_iter)?;
    debug_assert!(status != Status::Optimal || sx.max_primal_infeasibility() <= 1e-6);
    let warm = (status == Status::Optimal).then(|| WarmStart {
        status: sx.status.clone(),
    });
    Ok(Outcome {
        status,
        x: sx.structural_solution(),
        warm,
    })
}
