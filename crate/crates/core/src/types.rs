//! Plant constants, hourly market records and hour/day indexing.
//!
//! Hours are 0-based: hour `t` belongs to day `t / 24` at hour-of-day `t % 24`.
//! At hourly resolution MW and MWh are interchangeable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical and contractual constants of a wind + electrolyzer plant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantParams {
    /// MW
    pub wind_capacity: f64,
    /// MW
    pub electrolyzer_capacity: f64,
    /// kg/MWh
    pub efficiency: f64,
    /// €/kg
    pub hydrogen_price: f64,
    /// kg/day
    pub daily_quota: f64,
}

impl PlantParams {
    pub fn new(
        wind_capacity: f64,
        electrolyzer_capacity: f64,
        efficiency: f64,
        hydrogen_price: f64,
        daily_quota: f64,
    ) -> Result<Self> {
        let p = PlantParams {
            wind_capacity,
            electrolyzer_capacity,
            efficiency,
            hydrogen_price,
            daily_quota,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("wind_capacity", self.wind_capacity),
            ("electrolyzer_capacity", self.electrolyzer_capacity),
            ("efficiency", self.efficiency),
            ("hydrogen_price", self.hydrogen_price),
            ("daily_quota", self.daily_quota),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite, got {v}")));
            }
        }
        if self.wind_capacity <= 0.0 {
            return Err(Error::InvalidParams("wind_capacity must be > 0".into()));
        }
        if self.electrolyzer_capacity <= 0.0 {
            return Err(Error::InvalidParams("electrolyzer_capacity must be > 0".into()));
        }
        if self.efficiency <= 0.0 {
            return Err(Error::InvalidParams("efficiency must be > 0".into()));
        }
        if self.hydrogen_price < 0.0 {
            return Err(Error::InvalidParams("hydrogen_price must be >= 0".into()));
        }
        if self.daily_quota < 0.0 {
            return Err(Error::InvalidParams("daily_quota must be >= 0".into()));
        }
        let max_daily = 24.0 * self.efficiency * self.electrolyzer_capacity;
        if self.daily_quota > max_daily {
            return Err(Error::InvalidParams(format!(
                "daily_quota {} kg exceeds the {} kg the electrolyzer can produce in a day",
                self.daily_quota, max_daily
            )));
        }
        Ok(())
    }

    /// Big-M for the over/under-production disjunction.
    pub fn big_m(&self) -> f64 {
        self.wind_capacity + self.electrolyzer_capacity
    }

    /// Daily quota expressed as electrolyzer energy, MWh.
    pub fn quota_energy(&self) -> f64 {
        self.daily_quota / self.efficiency
    }
}

/// Electricity-equivalent value of hydrogen, €/MWh.
pub fn hydrogen_value(params: &PlantParams) -> f64 {
    params.efficiency * params.hydrogen_price
}

/// Realized market data for one hour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketHour {
    pub t: usize,
    pub lambda_da: f64,
    pub lambda_up: f64,
    pub lambda_dw: f64,
    pub wind_actual: f64,
}

impl MarketHour {
    /// Builds a validated hour: finite values, `lambda_up <= lambda_da <= lambda_dw`
    /// and wind within `[0, wind_capacity]`.
    pub fn new(
        t: usize,
        lambda_da: f64,
        lambda_up: f64,
        lambda_dw: f64,
        wind_actual: f64,
        params: &PlantParams,
    ) -> Result<Self> {
        let h = MarketHour {
            t,
            lambda_da,
            lambda_up,
            lambda_dw,
            wind_actual,
        };
        h.validate(params)?;
        Ok(h)
    }

    pub fn validate(&self, params: &PlantParams) -> Result<()> {
        let err = |msg: String| Error::InvalidHour { t: self.t, msg };
        for (name, v) in [
            ("lambda_da", self.lambda_da),
            ("lambda_up", self.lambda_up),
            ("lambda_dw", self.lambda_dw),
            ("wind_actual", self.wind_actual),
        ] {
            if !v.is_finite() {
                return Err(err(format!("{name} is not finite")));
            }
        }
        if !(self.lambda_up <= self.lambda_da && self.lambda_da <= self.lambda_dw) {
            return Err(err(format!(
                "dual pricing violated: lambda_up {} <= lambda_da {} <= lambda_dw {} does not hold",
                self.lambda_up, self.lambda_da, self.lambda_dw
            )));
        }
        if self.wind_actual < 0.0 || self.wind_actual > params.wind_capacity {
            return Err(err(format!(
                "wind_actual {} outside [0, {}]",
                self.wind_actual, params.wind_capacity
            )));
        }
        Ok(())
    }

    /// True when up and down balancing prices differ.
    pub fn strict_dual_pricing(&self) -> bool {
        self.lambda_up < self.lambda_dw
    }
}

/// The four profit terms of an hour or period, €.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfitTerms {
    /// Day-ahead trading revenue (negative when buying).
    pub da: f64,
    pub hydrogen: f64,
    /// Payment for over-production at the up-regulation price.
    pub up: f64,
    /// Cost of under-production at the down-regulation price (stored as a positive cost).
    pub down: f64,
}

impl ProfitTerms {
    pub fn total(&self) -> f64 {
        self.da + self.hydrogen + self.up - self.down
    }
}

impl std::ops::AddAssign for ProfitTerms {
    fn add_assign(&mut self, o: Self) {
        self.da += o.da;
        self.hydrogen += o.hydrogen;
        self.up += o.up;
        self.down += o.down;
    }
}

impl std::iter::Sum for ProfitTerms {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        let mut acc = ProfitTerms::default();
        for x in iter {
            acc += x;
        }
        acc
    }
}

/// Energy delivered over one hour, MWh.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct HourlyEnergy(f64);

impl HourlyEnergy {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() {
            Ok(HourlyEnergy(value))
        } else {
            Err(Error::InvalidInput(format!("energy {value} is not finite")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn hour_of_day(t: usize) -> usize {
    t % 24
}

pub fn day_of(t: usize) -> usize {
    t / 24
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn reference() -> PlantParams {
        PlantParams::new(10.0, 5.0, 20.0, 2.0, 400.0).unwrap()
    }

    #[test]
    fn hour_and_day_indexing() {
        assert_eq!(hour_of_day(25), 1);
        assert_eq!(hour_of_day(0), 0);
        assert_eq!(hour_of_day(47), 23);
        assert_eq!(day_of(0), 0);
        assert_eq!(day_of(23), 0);
        assert_eq!(day_of(24), 1);
        for t in 0..500 {
            assert_eq!(t, 24 * day_of(t) + hour_of_day(t));
        }
    }

    #[test]
    fn hydrogen_value_is_product() {
        let mut p = reference();
        assert_eq!(hydrogen_value(&p), 40.0);
        p.hydrogen_price = 0.0;
        assert_eq!(hydrogen_value(&p), 0.0);
        p.efficiency = 18.0;
        p.hydrogen_price = 2.5;
        assert_eq!(hydrogen_value(&p), 45.0);
    }

    #[test]
    fn params_reject_unreachable_quota_and_nan() {
        assert!(PlantParams::new(10.0, 5.0, 20.0, 2.0, 2400.0).is_ok());
        assert!(PlantParams::new(10.0, 5.0, 20.0, 2.0, 2400.1).is_err());
        assert!(PlantParams::new(f64::NAN, 5.0, 20.0, 2.0, 0.0).is_err());
        assert!(PlantParams::new(10.0, 0.0, 20.0, 2.0, 0.0).is_err());
        assert_eq!(reference().big_m(), 15.0);
        assert_eq!(reference().quota_energy(), 20.0);
    }

    #[test]
    fn market_hour_checks_ordering_and_range() {
        let p = reference();
        assert!(MarketHour::new(0, 50.0, 45.0, 55.0, 4.0, &p).is_ok());
        assert!(MarketHour::new(0, -20.0, -30.0, -20.0, 0.0, &p).is_ok());
        assert!(MarketHour::new(0, 50.0, 51.0, 55.0, 4.0, &p).is_err());
        assert!(MarketHour::new(0, 50.0, 45.0, 55.0, 10.5, &p).is_err());
        assert!(MarketHour::new(0, f64::NAN, 45.0, 55.0, 4.0, &p).is_err());
    }
}
