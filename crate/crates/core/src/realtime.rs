//! Real-time electrolyzer adjustment and dual-price imbalance settlement.

use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{hydrogen_value, MarketHour, PlantParams, ProfitTerms};

/// Settled result of one delivery hour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourOutcome {
    pub t: usize,
    pub p_da: f64,
    pub p_h_scheduled: f64,
    pub p_h_adjusted: f64,
    /// Wind surplus over the day-ahead position, `P^W - p_da`.
    pub delta: f64,
    pub over: f64,
    pub under: f64,
    pub terms: ProfitTerms,
}

impl HourOutcome {
    pub fn profit(&self) -> f64 {
        self.terms.total()
    }
}

/// Feasible electrolyzer set-point closest to absorbing `delta`.
pub fn alpha_h(delta: f64, params: &PlantParams) -> f64 {
    if delta < 0.0 {
        0.0
    } else if delta > params.electrolyzer_capacity {
        params.electrolyzer_capacity
    } else {
        delta
    }
}

/// Single-hour adjustment rule given (estimated) balancing prices.
pub fn pi_rule(delta: f64, params: &PlantParams, lambda_up: f64, lambda_dw: f64) -> Result<f64> {
    if lambda_up.is_nan() || lambda_dw.is_nan() || lambda_up > lambda_dw {
        return Err(Error::InvalidInput(format!(
            "balancing prices out of order: up {lambda_up} > down {lambda_dw}"
        )));
    }
    let hv = hydrogen_value(params);
    Ok(if lambda_up > hv {
        0.0
    } else if lambda_dw < hv {
        params.electrolyzer_capacity
    } else {
        alpha_h(delta, params)
    })
}

/// Lowest consumption this hour that keeps the daily quota reachable if the rest of the
/// schedule runs as planned, MWh.
pub fn quota_floor(quota_energy: f64, realized: f64, future_schedule: f64) -> f64 {
    (quota_energy - realized - future_schedule).max(0.0)
}

/// Running electrolyzer consumption within one day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DayLedger {
    /// Daily quota as energy, MWh.
    pub quota_energy: f64,
    /// Consumption realized so far today, MWh.
    pub realized: f64,
}

impl DayLedger {
    pub fn new(params: &PlantParams) -> Self {
        DayLedger {
            quota_energy: params.quota_energy(),
            realized: 0.0,
        }
    }

    pub fn floor(&self, future_schedule: f64) -> f64 {
        quota_floor(self.quota_energy, self.realized, future_schedule)
    }

    pub fn record(&mut self, consumption: f64) {
        self.realized += consumption;
    }
}

/// Settles one hour at realized prices; the scheduled consumption is taken equal to the
/// adjusted one.
pub fn settle_hour(p_da: f64, p_h_adjusted: f64, hour: &MarketHour, params: &PlantParams) -> HourOutcome {
    let imbalance = hour.wind_actual - p_da - p_h_adjusted;
    let over = imbalance.max(0.0);
    let under = (-imbalance).max(0.0);
    HourOutcome {
        t: hour.t,
        p_da,
        p_h_scheduled: p_h_adjusted,
        p_h_adjusted,
        delta: hour.wind_actual - p_da,
        over,
        under,
        terms: ProfitTerms {
            da: hour.lambda_da * p_da,
            hydrogen: hydrogen_value(params) * p_h_adjusted,
            up: hour.lambda_up * over,
            down: hour.lambda_dw * under,
        },
    }
}

/// Settles a day without any real-time adjustment.
pub fn settle_unadjusted(schedule: &[(f64, f64)], realized: &[MarketHour], params: &PlantParams) -> Vec<HourOutcome> {
    schedule
        .iter()
        .zip(realized)
        .map(|(&(da, h), m)| settle_hour(da, h, m, params))
        .collect()
}

/// Runs the quota-aware adjustment over one day.
///
/// `schedule` holds the cleared `(p_da, p_h)` per hour and `estimates` the balancing prices
/// `(up, down)` the rule acts on. With `strict_guard` the quota floor applies whether the
/// rule moves up or down, which guarantees the quota whenever it is physically reachable.
pub fn adjust_day(
    schedule: &[(f64, f64)],
    realized: &[MarketHour],
    estimates: &[(f64, f64)],
    params: &PlantParams,
    strict_guard: bool,
) -> Result<Vec<HourOutcome>> {
    if schedule.len() != 24 || realized.len() != 24 || estimates.len() != 24 {
        return Err(Error::InvalidInput(format!(
            "adjust_day needs 24 hours, got schedule {} / realized {} / estimates {}",
            schedule.len(),
            realized.len(),
            estimates.len()
        )));
    }
    let cap = params.electrolyzer_capacity;
    let mut ledger = DayLedger::new(params);
    let mut out = Vec::with_capacity(24);
    for i in 0..24 {
        let (p_da, p_h) = schedule[i];
        let hour = &realized[i];
        let delta = hour.wind_actual - p_da;
        let (est_up, est_dw) = estimates[i];
        let target = pi_rule(delta, params, est_up, est_dw)?;
        let future: f64 = schedule[i + 1..].iter().map(|s| s.1).sum();
        let floor = ledger.floor(future);
        let p_adj = if strict_guard || target <= p_h {
            target.max(floor)
        } else {
            target
        }
        .min(cap);
        ledger.record(p_adj);
        let mut o = settle_hour(p_da, p_adj, hour, params);
        o.p_h_scheduled = p_h;
        out.push(o);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateMode {
    /// Realized balancing prices.
    Perfect,
    /// Previous hour's realized balancing prices.
    Persistence,
}

impl FromStr for EstimateMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perfect" => Ok(EstimateMode::Perfect),
            "persistence" => Ok(EstimateMode::Persistence),
            other => Err(Error::InvalidInput(format!(
                "unknown estimate mode {other:?} (expected perfect or persistence)"
            ))),
        }
    }
}

/// Balancing price estimates `(up, down)` for each hour of `day`.
///
/// Persistence uses the preceding realized hour; the very first hour of a series falls back
/// to its cleared day-ahead price for both.
pub fn balancing_estimates(day: &[MarketHour], previous: Option<&MarketHour>, mode: EstimateMode) -> Vec<(f64, f64)> {
    match mode {
        EstimateMode::Perfect => day.iter().map(|h| (h.lambda_up, h.lambda_dw)).collect(),
        EstimateMode::Persistence => {
            let mut prev = previous.copied();
            day.iter()
                .map(|h| {
                    let e = prev.map_or((h.lambda_da, h.lambda_da), |p| (p.lambda_up, p.lambda_dw));
                    prev = Some(*h);
                    e
                })
                .collect()
        }
    }
}

pub const OUTCOME_HEADER: [&str; 12] = [
    "t",
    "p_da",
    "p_h_scheduled",
    "p_h_adjusted",
    "delta",
    "over",
    "under",
    "profit_da",
    "profit_hydrogen",
    "profit_up",
    "cost_down",
    "profit",
];

pub fn outcome_record(o: &HourOutcome) -> Vec<String> {
    [
        o.p_da,
        o.p_h_scheduled,
        o.p_h_adjusted,
        o.delta,
        o.over,
        o.under,
        o.terms.da,
        o.terms.hydrogen,
        o.terms.up,
        o.terms.down,
        o.profit(),
    ]
    .iter()
    .fold(vec![o.t.to_string()], |mut v, x| {
        v.push(x.to_string());
        v
    })
}

/// One row per hour with every field.
pub fn write_outcomes_csv<W: Write>(outcomes: &[HourOutcome], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(OUTCOME_HEADER)?;
    for o in outcomes {
        w.write_record(outcome_record(o))?;
    }
    w.flush().map_err(|e| Error::io("<outcome output>", e))?;
    Ok(())
}
