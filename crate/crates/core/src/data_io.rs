//! Hourly market CSV ingestion and export, forecast error models and a synthetic market.
//!
//! CSV layout (UTF-8, comma separated, `.` decimals):
//!
//! ```text
//! timestamp,lambda_da,lambda_up,lambda_dw,wind_actual,wind_forecast,da_price_forecast[,on_dk1,on_dk2,off_dk1,off_dk2]
//! 2020-01-01T00:00:00,41.2,38.0,44.9,6.1,5.8,43.0
//! ```

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{NaiveDateTime, TimeDelta};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{MarketHour, PlantParams};

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";
pub const BASE_COLUMNS: [&str; 7] = [
    "timestamp",
    "lambda_da",
    "lambda_up",
    "lambda_dw",
    "wind_actual",
    "wind_forecast",
    "da_price_forecast",
];
pub const AF_EXTRA_COLUMNS: [&str; 4] = ["on_dk1", "on_dk2", "off_dk1", "off_dk2"];

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRow {
    pub timestamp: NaiveDateTime,
    pub market: MarketHour,
    pub wind_forecast: f64,
    pub da_price_forecast: f64,
    /// on_dk1, on_dk2, off_dk1, off_dk2
    pub af: Option<[f64; 4]>,
}

impl DatasetRow {
    /// `[wind_forecast, on_dk1, on_dk2, off_dk1, off_dk2]` when the AF columns are present.
    pub fn af_context(&self) -> Option<Vec<f64>> {
        self.af.map(|a| {
            let mut v = Vec::with_capacity(5);
            v.push(self.wind_forecast);
            v.extend_from_slice(&a);
            v
        })
    }
}

/// A contiguous hourly series; `market.t` equals the row index.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub rows: Vec<DatasetRow>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Number of complete days.
    pub fn num_days(&self) -> usize {
        self.rows.len() / 24
    }

    pub fn day(&self, d: usize) -> &[DatasetRow] {
        &self.rows[24 * d..24 * (d + 1)]
    }

    pub fn days(&self, start: usize, count: usize) -> &[DatasetRow] {
        &self.rows[24 * start..24 * (start + count)]
    }

    pub fn has_af(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.af.is_some())
    }
}

/// A row whose forecast cells may be empty (raw data before synthetic forecasts exist).
#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub timestamp: NaiveDateTime,
    pub market: MarketHour,
    pub wind_forecast: Option<f64>,
    pub da_price_forecast: Option<f64>,
    pub af: Option<[f64; 4]>,
}

pub fn parse_timestamp(s: &str) -> std::result::Result<NaiveDateTime, chrono::ParseError> {
    NaiveDateTime::parse_from_str(s.trim().trim_end_matches('Z'), TIMESTAMP_FORMAT)
}

pub fn format_timestamp(ts: &NaiveDateTime) -> String {
    ts.format(TIMESTAMP_FORMAT).to_string()
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

/// Loads and validates a dataset file; every row must carry both forecasts.
pub fn load_dataset(path: &Path, params: &PlantParams) -> Result<Dataset> {
    read_dataset(open(path)?, &path.display().to_string(), params)
}

pub fn load_raw(path: &Path, params: &PlantParams) -> Result<Vec<RawRow>> {
    read_raw(open(path)?, &path.display().to_string(), params)
}

pub fn read_dataset<R: Read>(reader: R, name: &str, params: &PlantParams) -> Result<Dataset> {
    let raw = read_raw(reader, name, params)?;
    let rows = raw
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let missing = |col: &str| Error::Parse {
                file: name.to_string(),
                line: i as u64 + 2,
                msg: format!("{col} is empty"),
            };
            Ok(DatasetRow {
                timestamp: r.timestamp,
                market: r.market,
                wind_forecast: r.wind_forecast.ok_or_else(|| missing("wind_forecast"))?,
                da_price_forecast: r.da_price_forecast.ok_or_else(|| missing("da_price_forecast"))?,
                af: r.af,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { rows })
}

/// Parses rows, allowing empty forecast cells.
pub fn read_raw<R: Read>(reader: R, name: &str, params: &PlantParams) -> Result<Vec<RawRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    let with_af = if cols == BASE_COLUMNS {
        false
    } else if cols.len() == 11 && cols[..7] == BASE_COLUMNS && cols[7..] == AF_EXTRA_COLUMNS {
        true
    } else {
        return Err(Error::Parse {
            file: name.to_string(),
            line: 1,
            msg: format!(
                "header must be {} optionally followed by {}, got {}",
                BASE_COLUMNS.join(","),
                AF_EXTRA_COLUMNS.join(","),
                cols.join(",")
            ),
        });
    };

    let mut rows: Vec<RawRow> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let perr = |msg: String| Error::Parse {
            file: name.to_string(),
            line,
            msg,
        };
        let num = |i: usize| -> Result<f64> {
            let cell = record.get(i).unwrap_or("").trim();
            let v = f64::from_str(cell)
                .map_err(|_| perr(format!("{}: cannot parse {cell:?} as a number", cols[i])))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(perr(format!("{}: value {cell} is not finite", cols[i])))
            }
        };
        let opt = |i: usize| -> Result<Option<f64>> {
            if record.get(i).unwrap_or("").trim().is_empty() {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        let ts_cell = record.get(0).unwrap_or("");
        let timestamp = parse_timestamp(ts_cell)
            .map_err(|e| perr(format!("timestamp {ts_cell:?}: {e}")))?;
        if let Some(prev) = rows.last() {
            let expected = prev.timestamp + TimeDelta::hours(1);
            if timestamp <= prev.timestamp {
                return Err(perr(format!(
                    "timestamp {} is not after {}",
                    format_timestamp(&timestamp),
                    format_timestamp(&prev.timestamp)
                )));
            }
            if timestamp != expected {
                return Err(Error::Gap {
                    file: name.to_string(),
                    expected: format_timestamp(&expected),
                    found: format_timestamp(&timestamp),
                });
            }
        }
        let market = MarketHour {
            t: rows.len(),
            lambda_da: num(1)?,
            lambda_up: num(2)?,
            lambda_dw: num(3)?,
            wind_actual: num(4)?,
        };
        market.validate(params).map_err(|e| perr(e.to_string()))?;
        let af = if with_af {
            Some([num(7)?, num(8)?, num(9)?, num(10)?])
        } else {
            None
        };
        rows.push(RawRow {
            timestamp,
            market,
            wind_forecast: opt(5)?,
            da_price_forecast: opt(6)?,
            af,
        });
    }
    Ok(rows)
}

pub fn write_dataset<W: Write>(dataset: &Dataset, out: W) -> Result<()> {
    let with_af = dataset.has_af();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = BASE_COLUMNS.to_vec();
    if with_af {
        header.extend(AF_EXTRA_COLUMNS);
    }
    w.write_record(&header)?;
    for r in &dataset.rows {
        let mut rec = vec![
            format_timestamp(&r.timestamp),
            r.market.lambda_da.to_string(),
            r.market.lambda_up.to_string(),
            r.market.lambda_dw.to_string(),
            r.market.wind_actual.to_string(),
            r.wind_forecast.to_string(),
            r.da_price_forecast.to_string(),
        ];
        if with_af {
            rec.extend(r.af.unwrap_or_default().iter().map(f64::to_string));
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<dataset output>", e))?;
    Ok(())
}

pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset(dataset, f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorMode {
    /// Resample observed residuals with replacement.
    Bootstrap,
    /// Draw from a normal distribution fitted by maximum likelihood.
    Gaussian,
}

impl FromStr for ErrorMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bootstrap" => Ok(ErrorMode::Bootstrap),
            "gaussian" => Ok(ErrorMode::Gaussian),
            other => Err(Error::InvalidInput(format!(
                "unknown error model {other:?} (expected bootstrap or gaussian)"
            ))),
        }
    }
}

/// Forecast error distribution, `actual - forecast`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorModel {
    pub mode: ErrorMode,
    pub residuals: Vec<f64>,
    pub mean: f64,
    /// Population (maximum likelihood) standard deviation.
    pub std_dev: f64,
    pub seed: u64,
}

/// Fits an error model from `(forecast, actual)` pairs.
pub fn fit_error_model(pairs: &[(f64, f64)], mode: ErrorMode, seed: u64) -> Result<ErrorModel> {
    if pairs.len() < 24 {
        return Err(Error::InsufficientData(format!(
            "error model needs at least 24 forecast/actual pairs, got {}",
            pairs.len()
        )));
    }
    let residuals: Vec<f64> = pairs.iter().map(|(f, a)| a - f).collect();
    let n = residuals.len() as f64;
    let mean = residuals.iter().sum::<f64>() / n;
    let var = residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    Ok(ErrorModel {
        mode,
        residuals,
        mean,
        std_dev: var.sqrt(),
        seed,
    })
}

impl ErrorModel {
    /// `n` i.i.d. errors; the same seed always yields the same sequence.
    pub fn sample(&self, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        match self.mode {
            ErrorMode::Bootstrap => (0..n)
                .map(|_| self.residuals[rng.random_range(0..self.residuals.len())])
                .collect(),
            ErrorMode::Gaussian => {
                if self.std_dev == 0.0 {
                    return vec![self.mean; n];
                }
                let dist = Normal::new(self.mean, self.std_dev).expect("finite std_dev");
                (0..n).map(|_| dist.sample(&mut rng)).collect()
            }
        }
    }
}

/// Error model residuals are `actual - forecast`, so a forecast is `actual - error`.
/// With `capacity` set, forecasts are clipped to `[0, capacity]` (wind); prices pass `None`.
pub fn generate_forecasts(actuals: &[f64], model: &ErrorModel, capacity: Option<f64>) -> Vec<f64> {
    model
        .sample(actuals.len())
        .into_iter()
        .zip(actuals)
        .map(|(e, a)| {
            let f = a - e;
            match capacity {
                Some(cap) => f.clamp(0.0, cap),
                None => f,
            }
        })
        .collect()
}

/// Parameters of the stationary synthetic market.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub days: usize,
    /// Standard deviation of the plant wind forecast error, MW.
    pub wind_error_sd: f64,
    /// Standard deviation of the day-ahead price forecast error, €/MWh.
    pub price_error_sd: f64,
    /// Mean day-ahead price, €/MWh.
    pub price_level: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            days: 120,
            wind_error_sd: 1.2,
            price_error_sd: 10.0,
            price_level: 45.0,
        }
    }
}

/// Generates a stationary hourly market with noisy forecasts and AF columns.
pub fn synthetic_market(params: &PlantParams, cfg: &SynthConfig, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let cap = params.wind_capacity;
    let start = NaiveDateTime::parse_from_str("2020-01-01T00:00:00", TIMESTAMP_FORMAT)
        .expect("valid start timestamp");
    let mut rows = Vec::with_capacity(24 * cfg.days);
    let mut wind_state: f64 = 0.0;
    let mut region = [0.0f64; 4];
    for d in 0..cfg.days {
        let day_level = cfg.price_level + 8.0 * std.sample(&mut rng);
        for h in 0..24 {
            let t = 24 * d + h;
            // latent weather drives plant wind and the regional forecasts
            wind_state = 0.9 * wind_state + 0.45 * std.sample(&mut rng);
            let share = 1.0 / (1.0 + (-(wind_state + 0.2)).exp());
            let wind_actual = (cap * share).clamp(0.0, cap);
            for (k, r) in region.iter_mut().enumerate() {
                let scale = [1200.0, 400.0, 900.0, 600.0][k];
                *r = (scale * share + 0.04 * scale * std.sample(&mut rng)).max(0.0);
            }
            let phase = std::f64::consts::TAU * (h as f64 - 7.0) / 24.0;
            let shape = 12.0 * phase.sin() + 6.0 * (2.0 * phase).sin();
            let lambda_da = day_level + shape - 18.0 * (share - 0.5) + 6.0 * std.sample(&mut rng);
            let up_gap = 0.5 + (6.0 * std.sample(&mut rng)).abs();
            let dw_gap = 0.5 + (6.0 * std.sample(&mut rng)).abs();
            let market = MarketHour::new(
                t,
                lambda_da,
                lambda_da - up_gap,
                lambda_da + dw_gap,
                wind_actual,
                params,
            )?;
            let wind_forecast = (wind_actual + cfg.wind_error_sd * std.sample(&mut rng)).clamp(0.0, cap);
            let da_price_forecast = lambda_da + cfg.price_error_sd * std.sample(&mut rng);
            rows.push(DatasetRow {
                timestamp: start + TimeDelta::hours(t as i64),
                market,
                wind_forecast,
                da_price_forecast,
                af: Some(region),
            });
        }
    }
    Ok(Dataset { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> PlantParams {
        PlantParams::new(10.0, 5.0, 20.0, 2.0, 400.0).unwrap()
    }

    fn csv_rows(n: usize) -> String {
        let mut s = String::from(
            "timestamp,lambda_da,lambda_up,lambda_dw,wind_actual,wind_forecast,da_price_forecast\n",
        );
        for t in 0..n {
            s.push_str(&format!(
                "2020-01-{:02}T{:02}:00:00,50,45,55,4,4.5,48\n",
                1 + t / 24,
                t % 24
            ));
        }
        s
    }

    #[test]
    fn loads_two_days() {
        let ds = read_dataset(csv_rows(48).as_bytes(), "mem", &params()).unwrap();
        assert_eq!(ds.len(), 48);
        assert_eq!(ds.num_days(), 2);
        assert_eq!(ds.rows[30].market.t, 30);
    }

    #[test]
    fn dual_pricing_violation_names_the_line() {
        let text = csv_rows(3).replace(
            "2020-01-01T01:00:00,50,45,55",
            "2020-01-01T01:00:00,50,51,55",
        );
        let err = read_dataset(text.as_bytes(), "mem", &params()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert!(msg.contains("dual pricing"), "{msg}");
    }

    #[test]
    fn missing_hour_is_a_gap() {
        let text: String = csv_rows(5)
            .lines()
            .enumerate()
            .filter(|(i, _)| *i != 3)
            .map(|(_, l)| format!("{l}\n"))
            .collect();
        let err = read_dataset(text.as_bytes(), "mem", &params()).unwrap_err();
        assert!(matches!(&err, Error::Gap { expected, .. } if expected == "2020-01-01T02:00:00"), "{err}");
    }

    #[test]
    fn header_must_match_exactly() {
        let text = csv_rows(2).replace("lambda_da", "Lambda_DA");
        assert!(read_dataset(text.as_bytes(), "mem", &params()).is_err());
    }

    #[test]
    fn raw_rows_allow_missing_forecasts() {
        let text = csv_rows(2).replace(",4.5,48\n", ",,\n");
        let raw = read_raw(text.as_bytes(), "mem", &params()).unwrap();
        assert_eq!(raw[0].wind_forecast, None);
        assert!(read_dataset(text.as_bytes(), "mem", &params()).is_err());
    }

    #[test]
    fn export_then_load_is_identity() {
        let ds = synthetic_market(&params(), &SynthConfig { days: 3, ..Default::default() }, 5).unwrap();
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf).unwrap();
        let back = read_dataset(buf.as_slice(), "mem", &params()).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn error_model_examples() {
        let same: Vec<(f64, f64)> = (0..30).map(|i| (f64::from(i), f64::from(i))).collect();
        let m = fit_error_model(&same, ErrorMode::Bootstrap, 1).unwrap();
        let actual: Vec<f64> = (0..50).map(f64::from).collect();
        let scaled: Vec<f64> = actual.iter().map(|a| a / 10.0).collect();
        assert_eq!(generate_forecasts(&scaled, &m, Some(10.0)), scaled);

        let pm: Vec<(f64, f64)> = (0..24)
            .map(|i| if i % 2 == 0 { (0.0, -1.0) } else { (0.0, 1.0) })
            .collect();
        let g = fit_error_model(&pm, ErrorMode::Gaussian, 1).unwrap();
        assert_eq!(g.mean, 0.0);
        assert_eq!(g.std_dev, 1.0);

        assert!(fit_error_model(&pm[..23], ErrorMode::Gaussian, 1).is_err());
    }

    #[test]
    fn sampling_is_seeded() {
        let pairs: Vec<(f64, f64)> = (0..40).map(|i| (0.0, f64::from(i % 7) - 3.0)).collect();
        for mode in [ErrorMode::Bootstrap, ErrorMode::Gaussian] {
            let a = fit_error_model(&pairs, mode, 9).unwrap();
            let b = fit_error_model(&pairs, mode, 9).unwrap();
            let c = fit_error_model(&pairs, mode, 10).unwrap();
            let x = vec![5.0; 100];
            assert_eq!(generate_forecasts(&x, &a, None), generate_forecasts(&x, &b, None));
            assert_ne!(generate_forecasts(&x, &a, None), generate_forecasts(&x, &c, None));
        }
    }

    #[test]
    fn wind_forecasts_are_clipped() {
        let pairs: Vec<(f64, f64)> = (0..24).map(|_| (1.0, 0.0)).collect();
        // every residual is -1, so every forecast is actual + 1
        let m = fit_error_model(&pairs, ErrorMode::Bootstrap, 3).unwrap();
        assert_eq!(generate_forecasts(&[9.8], &m, Some(10.0)), vec![10.0]);
        assert_eq!(generate_forecasts(&[9.8], &m, None), vec![10.8]);
    }
}
