//! q-policies keyed by product, hour of day and price domain.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{domain_index, FeatureSchema, ForecastModel, PriceDomains};
use crate::types::{hour_of_day, PlantParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    /// One policy per hour of day (HA) instead of a single general one (GA).
    pub hourly: bool,
    pub domains: PriceDomains,
}

impl Architecture {
    pub fn general() -> Self {
        Architecture {
            hourly: false,
            domains: PriceDomains::single(),
        }
    }

    pub fn hourly() -> Self {
        Architecture {
            hourly: true,
            domains: PriceDomains::single(),
        }
    }

    pub fn with_domains(hourly: bool, domains: PriceDomains) -> Self {
        Architecture { hourly, domains }
    }

    /// GA, HA, GA+PD or HA+PD.
    pub fn label(&self) -> String {
        let base = if self.hourly { "HA" } else { "GA" };
        if self.domains.count() > 1 {
            format!("{base}+PD")
        } else {
            base.to_string()
        }
    }

    fn hour_slots(&self) -> usize {
        if self.hourly {
            24
        } else {
            1
        }
    }

    /// Every key the architecture implies, in canonical order.
    pub fn keys(&self) -> Vec<PolicyKey> {
        let m = self.domains.count();
        let mut keys = Vec::with_capacity(2 * self.hour_slots() * m);
        for product in [Product::DA, Product::H] {
            for h in 0..self.hour_slots() {
                for i in 0..m {
                    keys.push(PolicyKey {
                        product,
                        hour_of_day: self.hourly.then_some(h),
                        domain: (m > 1).then_some(i),
                    });
                }
            }
        }
        keys
    }

    /// Position of the key for `(product, t, price)` in [`Architecture::keys`].
    pub fn key_index(&self, product: Product, t: usize, price: f64) -> usize {
        let m = self.domains.count();
        let h = if self.hourly { hour_of_day(t) } else { 0 };
        let i = domain_index(&self.domains, price);
        let p = match product {
            Product::DA => 0,
            Product::H => 1,
        };
        (p * self.hour_slots() + h) * m + i
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Product {
    /// Day-ahead market trade.
    DA,
    /// Electrolyzer consumption.
    H,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PolicyKey {
    pub product: Product,
    pub hour_of_day: Option<usize>,
    pub domain: Option<usize>,
}

impl fmt::Display for PolicyKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.product)?;
        if let Some(h) = self.hour_of_day {
            write!(f, "/h{h}")?;
        }
        if let Some(i) = self.domain {
            write!(f, "/d{i}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyEntry {
    pub key: PolicyKey,
    pub q: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub first_day: usize,
    pub days: usize,
    pub objective: f64,
}

/// A complete set of learned policies plus what is needed to evaluate them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySet {
    pub schema: FeatureSchema,
    pub architecture: Architecture,
    /// One entry per key of the architecture, in canonical order.
    pub entries: Vec<PolicyEntry>,
    /// Present for FM feature schemas.
    pub forecast_model: Option<ForecastModel>,
    pub meta: TrainingMeta,
}

impl PolicySet {
    pub fn new(
        schema: FeatureSchema,
        architecture: Architecture,
        coefficients: Vec<Vec<f64>>,
        forecast_model: Option<ForecastModel>,
        meta: TrainingMeta,
    ) -> Result<Self> {
        let entries = architecture
            .keys()
            .into_iter()
            .zip(coefficients)
            .map(|(key, q)| PolicyEntry { key, q })
            .collect();
        let ps = PolicySet {
            schema,
            architecture,
            entries,
            forecast_model,
            meta,
        };
        ps.validate()?;
        Ok(ps)
    }

    pub fn validate(&self) -> Result<()> {
        let keys = self.architecture.keys();
        if keys.len() != self.entries.len() {
            return Err(Error::InvalidInput(format!(
                "{} architecture needs {} policies, found {}",
                self.architecture.label(),
                keys.len(),
                self.entries.len()
            )));
        }
        let n = self.schema.dimension();
        for (k, e) in keys.iter().zip(&self.entries) {
            if *k != e.key {
                return Err(Error::InvalidInput(format!(
                    "policy {} found where {} was expected",
                    e.key, k
                )));
            }
            if e.q.len() != n {
                return Err(Error::SchemaMismatch(format!(
                    "policy {} has {} coefficients, schema needs {n}",
                    e.key,
                    e.q.len()
                )));
            }
        }
        Ok(())
    }

    pub fn q(&self, product: Product, t: usize, price: f64) -> &[f64] {
        &self.entries[self.architecture.key_index(product, t, price)].q
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ps: PolicySet = serde_json::from_str(text)?;
        ps.validate()?;
        Ok(ps)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

fn dot(q: &[f64], context: &[f64], price: f64) -> f64 {
    let n = context.len();
    q[..n].iter().zip(context).map(|(a, x)| a * x).sum::<f64>() + q[n] * price + q[n + 1]
}

/// Unclipped `(p_da, p_h)` for hour `t` at day-ahead price `price`.
pub fn evaluate_raw(ps: &PolicySet, t: usize, price: f64, context: &[f64]) -> Result<(f64, f64)> {
    ps.schema.check_context(context)?;
    if !price.is_finite() {
        return Err(Error::InvalidInput(format!("price {price} is not finite")));
    }
    Ok((
        dot(ps.q(Product::DA, t, price), context, price),
        dot(ps.q(Product::H, t, price), context, price),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Repaired {
    pub p_da: f64,
    pub p_h: f64,
    pub clipped: bool,
}

/// Clips `p_h` to `[0, P̄H]` and `p_da` to `[-P̄H, P̄W]`.
pub fn repair(p_da: f64, p_h: f64, params: &PlantParams) -> Repaired {
    let da = p_da.clamp(-params.electrolyzer_capacity, params.wind_capacity);
    let h = p_h.clamp(0.0, params.electrolyzer_capacity);
    Repaired {
        p_da: da,
        p_h: h,
        clipped: da != p_da || h != p_h,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureVariant;

    fn params() -> PlantParams {
        PlantParams::new(10.0, 5.0, 20.0, 2.0, 400.0).unwrap()
    }

    fn ga(q_da: Vec<f64>, q_h: Vec<f64>) -> PolicySet {
        PolicySet::new(
            FeatureVariant::RF.schema(),
            Architecture::general(),
            vec![q_da, q_h],
            None,
            TrainingMeta::default(),
        )
        .unwrap()
    }

    #[test]
    fn dot_products() {
        let ps = ga(vec![0.5, 0.0, 10.0], vec![0.0, 0.1, 0.0]);
        let (da, h) = evaluate_raw(&ps, 7, 55.0, &[4.0]).unwrap();
        assert_eq!(da, 12.0);
        assert!((h - 5.5).abs() < 1e-12);
        assert!(evaluate_raw(&ps, 7, 55.0, &[4.0, 1.0]).is_err());
    }

    #[test]
    fn hourly_domain_keying() {
        let arch = Architecture::with_domains(true, PriceDomains::new(vec![40.0, 90.0]).unwrap());
        let keys = arch.keys();
        assert_eq!(keys.len(), 144);
        let idx = arch.key_index(Product::H, 25, 40.0);
        assert_eq!(
            keys[idx],
            PolicyKey {
                product: Product::H,
                hour_of_day: Some(1),
                domain: Some(1)
            }
        );
        assert_eq!(arch.label(), "HA+PD");
        // each key tags its own coefficients, so evaluation picks the expected one
        let coefs: Vec<Vec<f64>> = (0..keys.len()).map(|i| vec![0.0, 0.0, i as f64]).collect();
        let ps = PolicySet::new(FeatureVariant::RF.schema(), arch, coefs, None, TrainingMeta::default())
            .unwrap();
        let (_, h) = evaluate_raw(&ps, 25, 40.0, &[3.0]).unwrap();
        assert_eq!(h, idx as f64);
    }

    #[test]
    fn repair_examples() {
        let p = params();
        let r = repair(12.0, 3.0, &p);
        assert_eq!((r.p_da, r.p_h, r.clipped), (10.0, 3.0, true));
        let r = repair(-7.0, 6.0, &p);
        assert_eq!((r.p_da, r.p_h), (-5.0, 5.0));
        let r = repair(4.0, 2.0, &p);
        assert_eq!((r.p_da, r.p_h, r.clipped), (4.0, 2.0, false));
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let ps = ga(vec![0.1 + 0.2, -1.0 / 3.0, 1e-17], vec![std::f64::consts::PI, 2.5e300, -0.0]);
        let back = PolicySet::from_json(&ps.to_json().unwrap()).unwrap();
        assert_eq!(ps, back);
        for (a, b) in ps.entries.iter().zip(&back.entries) {
            for (x, y) in a.q.iter().zip(&b.q) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn incomplete_sets_are_rejected() {
        let r = PolicySet::new(
            FeatureVariant::RF.schema(),
            Architecture::hourly(),
            vec![vec![0.0; 3]; 3],
            None,
            TrainingMeta::default(),
        );
        assert!(r.is_err());
    }
}
