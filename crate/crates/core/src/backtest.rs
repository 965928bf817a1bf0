//! Sliding-window retraining and day-by-day simulation: bid, clear, adjust, settle.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::benchmarks::{deterministic_day, hindsight_day, optimal_adjustment_outcomes};
use crate::bidding::{clear, discretize, BidCurve, GridConfig};
use crate::data_io::{Dataset, DatasetRow};
use crate::error::{Error, Result};
use crate::features::{default_domains, fit_forecast_model, row_context, FeatureVariant, PriceDomains};
use crate::policy::{Architecture, PolicySet};
use crate::realtime::{
    adjust_day, balancing_estimates, outcome_record, settle_hour, settle_unadjusted, EstimateMode, HourOutcome,
    OUTCOME_HEADER,
};
use crate::training::{train, TrainingReport, TrainingWindow};
use crate::types::{MarketHour, PlantParams, ProfitTerms};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BacktestConfig {
    /// Training window length W, days.
    pub window_days: usize,
    /// Retrain interval R, days.
    pub retrain_days: usize,
    pub hourly: bool,
    pub price_domains: bool,
    pub features: FeatureVariant,
    pub grid: GridConfig,
    pub strict_guard: bool,
    pub estimates: EstimateMode,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        BacktestConfig {
            window_days: 180,
            retrain_days: 7,
            hourly: true,
            price_domains: true,
            features: FeatureVariant::RF,
            grid: GridConfig::default(),
            strict_guard: true,
            estimates: EstimateMode::Perfect,
        }
    }
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_days == 0 || self.retrain_days == 0 {
            return Err(Error::InvalidInput("window_days and retrain_days must be >= 1".into()));
        }
        self.grid.validate()
    }

    /// e.g. `HA+PD/RF`
    pub fn label(&self) -> String {
        let base = if self.hourly { "HA" } else { "GA" };
        let pd = if self.price_domains { "+PD" } else { "" };
        format!("{base}{pd}/{}", self.features)
    }
}

/// Profits of one test day at each stage of the real-time process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DayRecord {
    pub day: usize,
    /// Cleared schedule settled as is.
    pub unadjusted: ProfitTerms,
    /// After the rule-based adjustment.
    pub adjusted: ProfitTerms,
    /// After the perfect-foresight adjustment.
    pub opt_adjust: ProfitTerms,
    /// Hydrogen delivered after the rule-based adjustment, kg.
    pub hydrogen_kg: f64,
    pub retrained: bool,
    pub clipped_steps: usize,
    pub clamped_hours: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestReport {
    pub model: String,
    pub first_test_day: usize,
    pub days: Vec<DayRecord>,
    /// Rule-adjusted outcome of every test hour.
    pub hourly: Vec<HourOutcome>,
    pub quota_violations: usize,
    pub clipped_steps: usize,
    pub clamped_hours: usize,
    pub retrains: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Unadjusted,
    Adjusted,
    OptAdjust,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Unadjusted => "day-ahead",
            Stage::Adjusted => "rule-adjusted",
            Stage::OptAdjust => "optimal-adjustment",
        }
    }
}

impl DayRecord {
    pub fn stage(&self, s: Stage) -> ProfitTerms {
        match s {
            Stage::Unadjusted => self.unadjusted,
            Stage::Adjusted => self.adjusted,
            Stage::OptAdjust => self.opt_adjust,
        }
    }
}

impl BacktestReport {
    pub fn terms(&self, s: Stage) -> ProfitTerms {
        self.days.iter().map(|d| d.stage(s)).sum()
    }

    pub fn total(&self, s: Stage) -> f64 {
        self.terms(s).total()
    }
}

/// Training window `[retrain_day - W, retrain_day)` and the policies learned on it.
///
/// FM models are fitted on every hour before `retrain_day`, which includes but usually
/// extends beyond the policy window.
pub fn train_for_day(
    dataset: &Dataset,
    params: &PlantParams,
    cfg: &BacktestConfig,
    retrain_day: usize,
) -> Result<(PolicySet, TrainingReport)> {
    if retrain_day < cfg.window_days || retrain_day > dataset.num_days() {
        return Err(Error::InsufficientData(format!(
            "cannot train for day {retrain_day} with a {}-day window on {} days of data",
            cfg.window_days,
            dataset.num_days()
        )));
    }
    let schema = cfg.features.schema();
    let fm = if cfg.features == FeatureVariant::FM {
        let history: Vec<(Vec<f64>, f64)> = dataset.rows[..24 * retrain_day]
            .iter()
            .map(|r| {
                r.af_context()
                    .map(|c| (c, r.market.wind_actual))
                    .ok_or_else(|| Error::SchemaMismatch("FM features need AF columns".into()))
            })
            .collect::<Result<_>>()?;
        Some(fit_forecast_model(&history)?)
    } else {
        None
    };
    let rows = dataset.days(retrain_day - cfg.window_days, cfg.window_days);
    let domains = if cfg.price_domains {
        let prices: Vec<f64> = rows.iter().map(|r| r.market.lambda_da).collect();
        default_domains(params, &prices)?
    } else {
        PriceDomains::single()
    };
    let arch = Architecture::with_domains(cfg.hourly, domains);
    let window = TrainingWindow::from_rows(rows, &schema, fm.as_ref(), params)?;
    let (mut ps, report) = train(&window, &arch, &schema, params)?;
    log::debug!(
        "trained {} on days {}..{}: objective {:.2}",
        cfg.label(),
        retrain_day - cfg.window_days,
        retrain_day,
        report.objective
    );
    ps.forecast_model = fm;
    Ok((ps, report))
}

/// Bid curves for the 24 hours in `rows`, using only their forecast columns.
pub fn bids_for_day(ps: &PolicySet, rows: &[DatasetRow], params: &PlantParams, grid: &GridConfig) -> Result<Vec<BidCurve>> {
    rows.iter()
        .map(|r| {
            let ctx = row_context(r, &ps.schema, ps.forecast_model.as_ref(), params.wind_capacity)?;
            discretize(ps, r.market.t, &ctx, params, grid)
        })
        .collect()
}

/// Day whose training produced the policies active on `day`.
pub fn retrain_day_for(day: usize, first_test_day: usize, retrain_days: usize) -> usize {
    first_test_day + (day - first_test_day) / retrain_days * retrain_days
}

fn check_span(dataset: &Dataset, first_test_day: usize) -> Result<()> {
    if first_test_day == 0 || first_test_day >= dataset.num_days() {
        return Err(Error::InsufficientData(format!(
            "need more than {first_test_day} whole days of data, have {}",
            dataset.num_days()
        )));
    }
    Ok(())
}

fn previous_hour(dataset: &Dataset, day: usize) -> Option<&MarketHour> {
    (day > 0).then(|| &dataset.rows[24 * day - 1].market)
}

struct DaySim {
    record: DayRecord,
    adjusted: Vec<HourOutcome>,
}

/// Settles a cleared schedule at every stage.
fn simulate_day(
    dataset: &Dataset,
    params: &PlantParams,
    day: usize,
    schedule: &[(f64, f64)],
    strict_guard: bool,
    estimates: EstimateMode,
) -> Result<DaySim> {
    let realized: Vec<MarketHour> = dataset.day(day).iter().map(|r| r.market).collect();
    let est = balancing_estimates(&realized, previous_hour(dataset, day), estimates);
    let unadjusted = settle_unadjusted(schedule, &realized, params);
    let adjusted = adjust_day(schedule, &realized, &est, params, strict_guard)?;
    let opt = optimal_adjustment_outcomes(schedule, &realized, params)?;
    let hydrogen_kg = params.efficiency * adjusted.iter().map(|o| o.p_h_adjusted).sum::<f64>();
    Ok(DaySim {
        record: DayRecord {
            day,
            unadjusted: unadjusted.iter().map(|o| o.terms).sum(),
            adjusted: adjusted.iter().map(|o| o.terms).sum(),
            opt_adjust: opt.iter().map(|o| o.terms).sum(),
            hydrogen_kg,
            retrained: false,
            clipped_steps: 0,
            clamped_hours: 0,
        },
        adjusted,
    })
}

fn quota_met(params: &PlantParams, hydrogen_kg: f64) -> bool {
    hydrogen_kg >= params.daily_quota - 1e-6
}

fn finish(model: String, first_test_day: usize, sims: Vec<DaySim>, params: &PlantParams) -> BacktestReport {
    let mut report = BacktestReport {
        model,
        first_test_day,
        days: Vec::with_capacity(sims.len()),
        hourly: Vec::with_capacity(24 * sims.len()),
        quota_violations: 0,
        clipped_steps: 0,
        clamped_hours: 0,
        retrains: 0,
    };
    for s in sims {
        let r = s.record;
        report.quota_violations += usize::from(!quota_met(params, r.hydrogen_kg));
        report.clipped_steps += r.clipped_steps;
        report.clamped_hours += r.clamped_hours;
        report.retrains += usize::from(r.retrained);
        report.days.push(r);
        report.hourly.extend(s.adjusted);
    }
    report
}

/// Runs the policy model with test days starting right after the first full window.
pub fn run_backtest(dataset: &Dataset, params: &PlantParams, cfg: &BacktestConfig) -> Result<BacktestReport> {
    run_backtest_from(dataset, params, cfg, cfg.window_days)
}

/// Runs the policy model over test days `first_test_day..`, retraining every
/// `retrain_days` days on the `window_days` days before.
pub fn run_backtest_from(
    dataset: &Dataset,
    params: &PlantParams,
    cfg: &BacktestConfig,
    first_test_day: usize,
) -> Result<BacktestReport> {
    cfg.validate()?;
    check_span(dataset, first_test_day)?;
    if first_test_day < cfg.window_days {
        return Err(Error::InsufficientData(format!(
            "first test day {first_test_day} leaves less than a {}-day window",
            cfg.window_days
        )));
    }
    let mut sims = Vec::new();
    let mut ps: Option<PolicySet> = None;
    for day in first_test_day..dataset.num_days() {
        let retrain = (day - first_test_day).is_multiple_of(cfg.retrain_days);
        if retrain || ps.is_none() {
            ps = Some(train_for_day(dataset, params, cfg, day)?.0);
        }
        let policy = ps.as_ref().expect("trained");
        let rows = dataset.day(day);
        let curves = bids_for_day(policy, rows, params, &cfg.grid)?;
        let mut clamped = 0;
        let schedule: Vec<(f64, f64)> = curves
            .iter()
            .zip(rows)
            .map(|(c, r)| {
                let cl = clear(c, r.market.lambda_da);
                clamped += usize::from(cl.clamped);
                (cl.p_da, cl.p_h)
            })
            .collect();
        let mut sim = simulate_day(dataset, params, day, &schedule, cfg.strict_guard, cfg.estimates)?;
        sim.record.retrained = retrain;
        sim.record.clipped_steps = curves.iter().map(|c| c.clipped_steps).sum();
        sim.record.clamped_hours = clamped;
        sims.push(sim);
    }
    Ok(finish(cfg.label(), first_test_day, sims, params))
}

/// Point-forecast planning with quantity-only bids over the same test days.
pub fn run_deterministic(
    dataset: &Dataset,
    params: &PlantParams,
    first_test_day: usize,
    strict_guard: bool,
    estimates: EstimateMode,
) -> Result<BacktestReport> {
    check_span(dataset, first_test_day)?;
    let mut sims = Vec::new();
    for day in first_test_day..dataset.num_days() {
        let rows = dataset.day(day);
        let prices: Vec<f64> = rows.iter().map(|r| r.da_price_forecast).collect();
        let wind: Vec<f64> = rows.iter().map(|r| r.wind_forecast).collect();
        let schedule = deterministic_day(&prices, &wind, params)?;
        sims.push(simulate_day(dataset, params, day, &schedule, strict_guard, estimates)?);
    }
    Ok(finish("Det".into(), first_test_day, sims, params))
}

/// Perfect-information schedules; every stage carries the same profit.
pub fn run_hindsight(dataset: &Dataset, params: &PlantParams, first_test_day: usize) -> Result<BacktestReport> {
    check_span(dataset, first_test_day)?;
    let mut sims = Vec::new();
    for day in first_test_day..dataset.num_days() {
        let rows = dataset.day(day);
        let (schedule, _) = hindsight_day(&rows.iter().map(|r| r.market).collect::<Vec<_>>(), params)?;
        let outcomes: Vec<HourOutcome> = schedule
            .iter()
            .zip(rows)
            .map(|(&(da, h), r)| settle_hour(da, h, &r.market, params))
            .collect();
        let terms: ProfitTerms = outcomes.iter().map(|o| o.terms).sum();
        let hydrogen_kg = params.efficiency * outcomes.iter().map(|o| o.p_h_adjusted).sum::<f64>();
        sims.push(DaySim {
            record: DayRecord {
                day,
                unadjusted: terms,
                adjusted: terms,
                opt_adjust: terms,
                hydrogen_kg,
                retrained: false,
                clipped_steps: 0,
                clamped_hours: 0,
            },
            adjusted: outcomes,
        });
    }
    Ok(finish("Hindsight".into(), first_test_day, sims, params))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub model: String,
    pub stage: &'static str,
    pub terms: ProfitTerms,
}

impl ComparisonRow {
    pub fn total(&self) -> f64 {
        self.terms.total()
    }
}

/// Evaluates every policy configuration plus Det and Hindsight on the same test days.
/// Configurations run on separate threads; results keep the input order.
///
/// The test period starts after the longest configured window. Det uses the guard and
/// estimate settings of the first configuration (defaults when none are given).
pub fn compare_models(
    dataset: &Dataset,
    params: &PlantParams,
    configs: &[BacktestConfig],
) -> Result<(Vec<ComparisonRow>, Vec<BacktestReport>)> {
    let first_test_day = configs.iter().map(|c| c.window_days).max().unwrap_or(1).max(1);
    let base = configs.first().copied().unwrap_or_default();
    let mut reports = std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|cfg| s.spawn(move || run_backtest_from(dataset, params, cfg, first_test_day)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("backtest thread panicked"))
            .collect::<Result<Vec<_>>>()
    })?;
    reports.push(run_deterministic(dataset, params, first_test_day, base.strict_guard, base.estimates)?);
    let hindsight = run_hindsight(dataset, params, first_test_day)?;
    let mut rows = Vec::new();
    for r in &reports {
        for s in [Stage::Unadjusted, Stage::Adjusted, Stage::OptAdjust] {
            rows.push(ComparisonRow {
                model: r.model.clone(),
                stage: s.name(),
                terms: r.terms(s),
            });
        }
    }
    rows.push(ComparisonRow {
        model: hindsight.model.clone(),
        stage: "hindsight",
        terms: hindsight.terms(Stage::Adjusted),
    });
    reports.push(hindsight);
    Ok((rows, reports))
}

/// Totals of the rule-adjusted and unadjusted stages for each training window length.
pub fn window_sweep(
    dataset: &Dataset,
    params: &PlantParams,
    base: &BacktestConfig,
    windows: &[usize],
) -> Result<Vec<(usize, f64, f64)>> {
    let first = windows.iter().copied().max().unwrap_or(base.window_days);
    windows
        .iter()
        .map(|&w| {
            let cfg = BacktestConfig {
                window_days: w,
                ..*base
            };
            let r = run_backtest_from(dataset, params, &cfg, first)?;
            Ok((w, r.total(Stage::Unadjusted), r.total(Stage::Adjusted)))
        })
        .collect()
}

fn flush<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| Error::io("<report output>", e))
}

/// `model,stage,profit,da,hydrogen,up,down`, one row per model and stage.
pub fn write_comparison_csv<W: Write>(rows: &[ComparisonRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "stage", "profit", "da", "hydrogen", "up", "down"])?;
    for r in rows {
        w.write_record([
            r.model.clone(),
            r.stage.to_string(),
            r.total().to_string(),
            r.terms.da.to_string(),
            r.terms.hydrogen.to_string(),
            r.terms.up.to_string(),
            r.terms.down.to_string(),
        ])?;
    }
    flush(w)
}

/// Per-day profits of each report at every stage.
pub fn write_daily_csv<W: Write>(reports: &[BacktestReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "model",
        "day",
        "day_ahead",
        "rule_adjusted",
        "optimal_adjustment",
        "hydrogen_kg",
        "retrained",
        "clipped_steps",
        "clamped_hours",
    ])?;
    for r in reports {
        for d in &r.days {
            w.write_record([
                r.model.clone(),
                d.day.to_string(),
                d.unadjusted.total().to_string(),
                d.adjusted.total().to_string(),
                d.opt_adjust.total().to_string(),
                d.hydrogen_kg.to_string(),
                d.retrained.to_string(),
                d.clipped_steps.to_string(),
                d.clamped_hours.to_string(),
            ])?;
        }
    }
    flush(w)
}

/// Hour-level audit trail of the rule-adjusted stage.
pub fn write_hourly_csv<W: Write>(reports: &[BacktestReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["model"];
    header.extend(OUTCOME_HEADER);
    w.write_record(&header)?;
    for r in reports {
        for o in &r.hourly {
            let mut rec = vec![r.model.clone()];
            rec.extend(outcome_record(o));
            w.write_record(&rec)?;
        }
    }
    flush(w)
}

pub fn write_sweep_csv<W: Write>(model: &str, rows: &[(usize, f64, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "window_days", "day_ahead", "rule_adjusted"])?;
    for (win, a, b) in rows {
        w.write_record([model.to_string(), win.to_string(), a.to_string(), b.to_string()])?;
    }
    flush(w)
}
