//! Feature vectors `[X̃, λ, 1]`, price domains and the auxiliary wind forecast model.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data_io::DatasetRow;
use crate::error::{Error, Result};
use crate::types::{hydrogen_value, PlantParams};

/// Which context features precede the price slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureVariant {
    /// Plant wind forecast only.
    RF,
    /// Plant forecast plus onshore/offshore forecasts for DK1 and DK2.
    AF,
    /// A single regression forecast computed from the AF features.
    FM,
}

impl FeatureVariant {
    pub fn schema(self) -> FeatureSchema {
        let names: &[&str] = match self {
            FeatureVariant::RF => &["wind_forecast"],
            FeatureVariant::AF => &AF_COLUMNS,
            FeatureVariant::FM => &["fm_forecast"],
        };
        FeatureSchema {
            variant: self,
            names: names.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl fmt::Display for FeatureVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FeatureVariant::RF => "RF",
            FeatureVariant::AF => "AF",
            FeatureVariant::FM => "FM",
        };
        f.write_str(s)
    }
}

impl FromStr for FeatureVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "RF" => Ok(FeatureVariant::RF),
            "AF" => Ok(FeatureVariant::AF),
            "FM" => Ok(FeatureVariant::FM),
            other => Err(Error::InvalidInput(format!(
                "unknown feature variant {other:?} (expected RF, AF or FM)"
            ))),
        }
    }
}

pub const AF_COLUMNS: [&str; 5] = ["wind_forecast", "on_dk1", "on_dk2", "off_dk1", "off_dk2"];

/// Ordered names of the context features. Names match dataset CSV headers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub variant: FeatureVariant,
    pub names: Vec<String>,
}

impl FeatureSchema {
    pub fn context_len(&self) -> usize {
        self.names.len()
    }

    /// Full feature dimension N (context + price slot + intercept).
    pub fn dimension(&self) -> usize {
        self.names.len() + 2
    }

    pub fn price_index(&self) -> usize {
        self.names.len()
    }

    pub fn check_context(&self, context: &[f64]) -> Result<()> {
        if context.len() != self.context_len() {
            return Err(Error::SchemaMismatch(format!(
                "{} schema expects {} context values, got {}",
                self.variant,
                self.context_len(),
                context.len()
            )));
        }
        if let Some(v) = context.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("context value {v} is not finite")));
        }
        Ok(())
    }
}

/// Context features with the price slot left open.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub context: Vec<f64>,
}

impl FeatureVector {
    pub fn new(schema: &FeatureSchema, context: Vec<f64>) -> Result<Self> {
        schema.check_context(&context)?;
        Ok(FeatureVector { context })
    }

    /// `[X̃, λ, 1]`
    pub fn with_price(&self, price: f64) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.context.len() + 2);
        x.extend_from_slice(&self.context);
        x.push(price);
        x.push(1.0);
        x
    }
}

/// Partition of the real line into `M` price intervals `[λ_{i-1}, λ_i)`.
///
/// Only the interior cut points are stored; the outer bounds are ±∞.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceDomains {
    cuts: Vec<f64>,
}

impl PriceDomains {
    pub fn new(cuts: Vec<f64>) -> Result<Self> {
        if cuts.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("price domain boundaries must be finite".into()));
        }
        if cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(format!(
                "price domain boundaries must be strictly increasing: {cuts:?}"
            )));
        }
        Ok(PriceDomains { cuts })
    }

    /// A single domain covering every price.
    pub fn single() -> Self {
        PriceDomains { cuts: Vec::new() }
    }

    pub fn count(&self) -> usize {
        self.cuts.len() + 1
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    /// `(lower, upper)` of domain `i`, possibly infinite.
    pub fn bounds(&self, i: usize) -> (f64, f64) {
        let lo = if i == 0 { f64::NEG_INFINITY } else { self.cuts[i - 1] };
        let hi = self.cuts.get(i).copied().unwrap_or(f64::INFINITY);
        (lo, hi)
    }
}

/// Index of the domain holding `price`; a price equal to a boundary belongs to the upper domain.
pub fn domain_index(domains: &PriceDomains, price: f64) -> usize {
    domains.cuts.partition_point(|&c| c <= price)
}

/// Nearest-rank percentile (`pct` in 1..=100) of a nonempty sample.
pub fn nearest_rank_percentile(values: &[f64], pct: usize) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = (pct * v.len()).div_ceil(100).max(1);
    v[rank - 1]
}

/// Three domains split at the hydrogen value and the 90th percentile of `training_prices`,
/// or two when the percentile does not exceed the hydrogen value.
pub fn default_domains(params: &PlantParams, training_prices: &[f64]) -> Result<PriceDomains> {
    if training_prices.is_empty() {
        return Err(Error::InsufficientData("no training prices for price domains".into()));
    }
    let hv = hydrogen_value(params);
    let p90 = nearest_rank_percentile(training_prices, 90);
    if p90 <= hv {
        log::warn!(
            "90th price percentile {p90} does not exceed the hydrogen value {hv}; using two price domains"
        );
        PriceDomains::new(vec![hv])
    } else {
        PriceDomains::new(vec![hv, p90])
    }
}

/// Linear wind forecast `q̃ · [X̃, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastModel {
    pub coefficients: Vec<f64>,
}

/// Least-squares fit of the target on `[context, 1]`.
///
/// Falls back to a lightly ridge-penalized solve when the design matrix is numerically
/// rank deficient.
pub fn fit_forecast_model(history: &[(Vec<f64>, f64)]) -> Result<ForecastModel> {
    let Some((first, _)) = history.first() else {
        return Err(Error::InsufficientData("empty forecast model history".into()));
    };
    let k = first.len() + 1;
    if history.len() < k {
        return Err(Error::InsufficientData(format!(
            "forecast model needs at least {k} rows, got {}",
            history.len()
        )));
    }
    if history.iter().any(|(x, _)| x.len() + 1 != k) {
        return Err(Error::SchemaMismatch("forecast model rows differ in length".into()));
    }
    if history
        .iter()
        .any(|(x, y)| !y.is_finite() || x.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::InvalidInput("forecast model history has non-finite values".into()));
    }
    let n = history.len();
    let design = DMatrix::from_fn(n, k, |i, j| {
        if j + 1 == k {
            1.0
        } else {
            history[i].0[j]
        }
    });
    let target = DVector::from_iterator(n, history.iter().map(|(_, y)| *y));

    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let coef = if smax > 0.0 && smin > 1e-9 * smax {
        svd.solve(&target, 0.0)
            .map_err(|e| Error::InvalidInput(format!("least squares failed: {e}")))?
    } else {
        let gram = design.transpose() * &design;
        let penalty = 1e-6 * gram.trace().max(1e-12) / k as f64;
        let lhs = &gram + DMatrix::identity(k, k) * penalty;
        let rhs = design.transpose() * &target;
        lhs.cholesky()
            .ok_or_else(|| Error::InvalidInput("ridge system not positive definite".into()))?
            .solve(&rhs)
    };
    Ok(ForecastModel {
        coefficients: coef.iter().copied().collect(),
    })
}

/// Model output for one context, clipped to `[0, wind_capacity]`.
pub fn apply_forecast_model(model: &ForecastModel, context: &[f64], wind_capacity: f64) -> Result<f64> {
    if context.len() + 1 != model.coefficients.len() {
        return Err(Error::SchemaMismatch(format!(
            "forecast model expects {} context values, got {}",
            model.coefficients.len() - 1,
            context.len()
        )));
    }
    let (slopes, intercept) = model.coefficients.split_at(context.len());
    let raw: f64 = slopes.iter().zip(context).map(|(a, x)| a * x).sum::<f64>() + intercept[0];
    Ok(raw.clamp(0.0, wind_capacity))
}

/// Context features of one dataset row under `schema`.
pub fn row_context(
    row: &DatasetRow,
    schema: &FeatureSchema,
    fm: Option<&ForecastModel>,
    wind_capacity: f64,
) -> Result<Vec<f64>> {
    match schema.variant {
        FeatureVariant::RF => Ok(vec![row.wind_forecast]),
        FeatureVariant::AF => row.af_context().ok_or_else(|| {
            Error::SchemaMismatch(format!("row {} has no AF columns", row.market.t))
        }),
        FeatureVariant::FM => {
            let model = fm.ok_or_else(|| {
                Error::SchemaMismatch("FM features need a fitted forecast model".into())
            })?;
            let af = row.af_context().ok_or_else(|| {
                Error::SchemaMismatch(format!("row {} has no AF columns", row.market.t))
            })?;
            Ok(vec![apply_forecast_model(model, &af, wind_capacity)?])
        }
    }
}
