//! Comparison models: point-forecast planning, perfect hindsight and the best possible
//! real-time adjustment of a fixed day-ahead position.

use std::fmt;

use h2bid_lp::{solve_lp, LinearProgram, Relation, Status};

use crate::error::{Error, Result};
use crate::realtime::{settle_hour, HourOutcome};
use crate::types::{hydrogen_value, MarketHour, PlantParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchmarkTag {
    Det,
    Hindsight,
    OptAdjust,
}

impl fmt::Display for BenchmarkTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BenchmarkTag::Det => "Det",
            BenchmarkTag::Hindsight => "Hindsight",
            BenchmarkTag::OptAdjust => "OptAdjust",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkResult {
    pub tag: BenchmarkTag,
    pub schedules: Vec<(f64, f64)>,
    pub outcomes: Vec<HourOutcome>,
    pub total_profit: f64,
}

fn solve(lp: &LinearProgram, what: &str) -> Result<Vec<f64>> {
    let s = solve_lp(lp)?;
    match s.status {
        Status::Optimal => Ok(s.x),
        other => Err(Error::Infeasible(format!("{what} LP ended {other:?}"))),
    }
}

/// Plans one day on point forecasts with zero planned imbalance.
///
/// Maximizes `Σ λ̂ p_da + ρλ^H p_h` with `p_da + p_h = P̂^W` each hour, the hourly boxes and
/// the daily quota. Wind forecasts are clipped to `[0, P̄^W]`.
pub fn deterministic_day(price_forecast: &[f64], wind_forecast: &[f64], params: &PlantParams) -> Result<Vec<(f64, f64)>> {
    if price_forecast.len() != 24 || wind_forecast.len() != 24 {
        return Err(Error::InvalidInput("deterministic_day needs 24 forecasts".into()));
    }
    let hv = hydrogen_value(params);
    let mut lp = LinearProgram::new();
    let mut quota = Vec::with_capacity(24);
    for (&price, &wind) in price_forecast.iter().zip(wind_forecast) {
        let wind = wind.clamp(0.0, params.wind_capacity);
        let da = lp.add_variable(price, -params.electrolyzer_capacity, params.wind_capacity);
        let h = lp.add_variable(hv, 0.0, params.electrolyzer_capacity);
        lp.add_constraint([(da, 1.0), (h, 1.0)], Relation::Eq, wind);
        quota.push((h, params.efficiency));
    }
    lp.add_constraint(quota, Relation::Ge, params.daily_quota);
    let x = solve(&lp, "deterministic")?;
    Ok(x.chunks(2).map(|c| (c[0], c[1])).collect())
}

/// Best schedule with perfect knowledge of the day's prices and wind.
pub fn hindsight_day(realized: &[MarketHour], params: &PlantParams) -> Result<(Vec<(f64, f64)>, f64)> {
    if realized.len() != 24 {
        return Err(Error::InvalidInput("hindsight_day needs 24 hours".into()));
    }
    let hv = hydrogen_value(params);
    let mut lp = LinearProgram::new();
    let mut quota = Vec::with_capacity(24);
    for m in realized {
        let da = lp.add_variable(m.lambda_da, -params.electrolyzer_capacity, params.wind_capacity);
        let h = lp.add_variable(hv, 0.0, params.electrolyzer_capacity);
        let o = lp.add_variable(m.lambda_up, 0.0, params.big_m());
        let u = lp.add_variable(-m.lambda_dw, 0.0, params.big_m());
        lp.add_constraint([(o, 1.0), (u, -1.0), (da, 1.0), (h, 1.0)], Relation::Eq, m.wind_actual);
        quota.push((h, params.efficiency));
    }
    lp.add_constraint(quota, Relation::Ge, params.daily_quota);
    let x = solve(&lp, "hindsight")?;
    let schedule: Vec<(f64, f64)> = x.chunks(4).map(|c| (c[0], c[1])).collect();
    let profit = schedule
        .iter()
        .zip(realized)
        .map(|(&(da, h), m)| settle_hour(da, h, m, params).profit())
        .sum();
    Ok((schedule, profit))
}

/// Best electrolyzer consumption per hour for a fixed day-ahead position, with perfect
/// foresight of the day's wind and balancing prices and the daily quota enforced.
pub fn optimal_adjustment_day(schedule: &[(f64, f64)], realized: &[MarketHour], params: &PlantParams) -> Result<Vec<f64>> {
    if schedule.len() != 24 || realized.len() != 24 {
        return Err(Error::InvalidInput("optimal_adjustment_day needs 24 hours".into()));
    }
    let hv = hydrogen_value(params);
    let mut lp = LinearProgram::new();
    let mut quota = Vec::with_capacity(24);
    for (&(p_da, _), m) in schedule.iter().zip(realized) {
        let h = lp.add_variable(hv, 0.0, params.electrolyzer_capacity);
        let o = lp.add_variable(m.lambda_up, 0.0, params.big_m());
        let u = lp.add_variable(-m.lambda_dw, 0.0, params.big_m());
        lp.add_constraint([(o, 1.0), (u, -1.0), (h, 1.0)], Relation::Eq, m.wind_actual - p_da);
        quota.push((h, params.efficiency));
    }
    lp.add_constraint(quota, Relation::Ge, params.daily_quota);
    let x = solve(&lp, "optimal adjustment")?;
    Ok(x.chunks(3).map(|c| c[0]).collect())
}

/// Settles a day with the consumption chosen by [`optimal_adjustment_day`].
pub fn optimal_adjustment_outcomes(
    schedule: &[(f64, f64)],
    realized: &[MarketHour],
    params: &PlantParams,
) -> Result<Vec<HourOutcome>> {
    let adj = optimal_adjustment_day(schedule, realized, params)?;
    Ok(schedule
        .iter()
        .zip(realized)
        .zip(adj)
        .map(|((&(da, h), m), a)| {
            let mut o = settle_hour(da, a, m, params);
            o.p_h_scheduled = h;
            o
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(quota: f64) -> PlantParams {
        PlantParams::new(10.0, 5.0, 20.0, 2.0, quota).unwrap()
    }

    fn flat(da: f64, up: f64, dw: f64, wind: f64) -> Vec<MarketHour> {
        (0..24)
            .map(|t| MarketHour {
                t,
                lambda_da: da,
                lambda_up: up,
                lambda_dw: dw,
                wind_actual: wind,
            })
            .collect()
    }

    #[test]
    fn deterministic_examples() {
        let s = deterministic_day(&[50.0; 24], &[4.0; 24], &params(0.0)).unwrap();
        assert!(s.iter().all(|&(da, h)| (da - 4.0).abs() < 1e-9 && h.abs() < 1e-9));
        let s = deterministic_day(&[30.0; 24], &[4.0; 24], &params(0.0)).unwrap();
        assert!(s.iter().all(|&(da, h)| (da + 1.0).abs() < 1e-9 && (h - 5.0).abs() < 1e-9));
        let s = deterministic_day(&[100.0; 24], &[4.0; 24], &params(400.0)).unwrap();
        let energy: f64 = s.iter().map(|x| x.1).sum();
        assert!((energy - 20.0).abs() < 1e-9);
        let obj: f64 = s.iter().map(|&(da, h)| 100.0 * da + 40.0 * h).sum();
        assert!((obj - (24.0 * 400.0 - 20.0 * 60.0)).abs() < 1e-6);
    }

    #[test]
    fn hindsight_examples() {
        let (s, profit) = hindsight_day(&flat(50.0, 45.0, 55.0, 4.0), &params(0.0)).unwrap();
        assert!((profit - 24.0 * 200.0).abs() < 1e-6);
        assert!(s.iter().all(|&(da, h)| (da - 4.0).abs() < 1e-9 && h.abs() < 1e-9));
        let (s, profit) = hindsight_day(&flat(30.0, 25.0, 35.0, 4.0), &params(0.0)).unwrap();
        assert!((profit - 24.0 * 170.0).abs() < 1e-6);
        assert!(s.iter().all(|&(da, h)| (da + 1.0).abs() < 1e-9 && (h - 5.0).abs() < 1e-9));
    }

    #[test]
    fn optimal_adjustment_absorbs_cheap_shortfall() {
        // down-regulation price below the hydrogen value: consuming more is worth it
        let realized = flat(30.0, 25.0, 35.0, 4.0);
        let adj = optimal_adjustment_day(&[(6.0, 0.0); 24], &realized, &params(0.0)).unwrap();
        assert!(adj.iter().all(|&a| (a - 5.0).abs() < 1e-9));
        let o = settle_hour(6.0, 5.0, &realized[0], &params(0.0));
        assert!((o.profit() - 135.0).abs() < 1e-9);
        assert!((settle_hour(6.0, 0.0, &realized[0], &params(0.0)).profit() - 110.0).abs() < 1e-9);
    }

    #[test]
    fn optimal_adjustment_releases_when_up_price_high() {
        let adj = optimal_adjustment_day(&[(2.0, 2.0); 24], &flat(50.0, 45.0, 55.0, 6.0), &params(0.0)).unwrap();
        assert!(adj.iter().all(|&a| a.abs() < 1e-9));
    }

    #[test]
    fn optimal_adjustment_meets_binding_quota() {
        // every MWh consumed loses money, so consumption sits exactly at the quota
        let adj = optimal_adjustment_day(&[(4.0, 0.0); 24], &flat(50.0, 45.0, 55.0, 4.0), &params(240.0)).unwrap();
        let total: f64 = adj.iter().sum();
        assert!((total - 12.0).abs() < 1e-9);
    }
}
