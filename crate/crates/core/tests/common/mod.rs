#![allow(dead_code)]

use chrono::{Duration, NaiveDateTime};
use h2bid::data_io::{Dataset, DatasetRow};
use h2bid::{MarketHour, PlantParams};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn plant(quota: f64) -> PlantParams {
    PlantParams::new(10.0, 5.0, 20.0, 2.0, quota).unwrap()
}

pub fn hour(t: usize, da: f64, up: f64, dw: f64, wind: f64) -> MarketHour {
    MarketHour {
        t,
        lambda_da: da,
        lambda_up: up,
        lambda_dw: dw,
        wind_actual: wind,
    }
}

/// Random hour with `up <= da <= dw`; strict spreads when `strict` is set.
pub fn random_hour(rng: &mut ChaCha8Rng, t: usize, params: &PlantParams, strict: bool) -> MarketHour {
    let da = rng.random_range(-20.0..120.0);
    let lo = if strict { 0.5 } else { 0.0 };
    let up = da - rng.random_range(lo..25.0);
    let dw = da + rng.random_range(lo..25.0);
    hour(t, da, up, dw, rng.random_range(0.0..=params.wind_capacity))
}

/// Hourly profit with the imbalance of `wind - p_da - p_h` settled at dual prices.
pub fn hour_profit(p_da: f64, p_h: f64, h: &MarketHour, params: &PlantParams) -> f64 {
    let imb = h.wind_actual - p_da - p_h;
    h.lambda_da * p_da
        + params.efficiency * params.hydrogen_price * p_h
        + h.lambda_up * imb.max(0.0)
        - h.lambda_dw * (-imb).max(0.0)
}

/// Best hourly profit over `(p_da, p_h)` on a 0.01 grid of the feasible boxes.
pub fn grid_best_hour(h: &MarketHour, params: &PlantParams) -> (f64, f64, f64) {
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    let da_steps = ((params.wind_capacity + params.electrolyzer_capacity) * 100.0).round() as i64;
    let h_steps = (params.electrolyzer_capacity * 100.0).round() as i64;
    for i in 0..=da_steps {
        let p_da = -params.electrolyzer_capacity + i as f64 / 100.0;
        for j in 0..=h_steps {
            let p_h = j as f64 / 100.0;
            let v = hour_profit(p_da, p_h, h, params);
            if v > best.0 {
                best = (v, p_da, p_h);
            }
        }
    }
    best
}

pub fn timestamp(t: usize) -> NaiveDateTime {
    NaiveDateTime::parse_from_str("2021-03-01T00:00:00", "%Y-%m-%dT%H:%M:%S").unwrap() + Duration::hours(t as i64)
}

/// Dataset with the same market hour repeated and perfect forecasts.
pub fn constant_dataset(days: usize, da: f64, up: f64, dw: f64, wind: f64) -> Dataset {
    Dataset {
        rows: (0..24 * days)
            .map(|t| DatasetRow {
                timestamp: timestamp(t),
                market: hour(t, da, up, dw, wind),
                wind_forecast: wind,
                da_price_forecast: da,
                af: Some([wind, 0.0, 0.0, 0.0]),
            })
            .collect(),
    }
}
