//! Stepwise price-quantity bid curves built from the price-dependent policies.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{evaluate_raw, repair, PolicySet};
use crate::types::PlantParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Steps per price-domain segment.
    pub steps_per_domain: usize,
    pub price_floor: f64,
    pub price_ceil: f64,
    /// Project quantities so `p_da` rises and `p_h` falls with price.
    pub monotone: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            steps_per_domain: 10,
            price_floor: -500.0,
            price_ceil: 3000.0,
            monotone: true,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps_per_domain == 0 {
            return Err(Error::InvalidInput("steps_per_domain must be >= 1".into()));
        }
        if !(self.price_floor.is_finite() && self.price_ceil.is_finite())
            || self.price_floor >= self.price_ceil
        {
            return Err(Error::InvalidInput(format!(
                "price axis [{}, {}] is empty",
                self.price_floor, self.price_ceil
            )));
        }
        Ok(())
    }
}

/// Quantities offered for prices in `[price_lo, price_hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BidStep {
    pub price_lo: f64,
    pub price_hi: f64,
    pub p_da: f64,
    pub p_h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BidCurve {
    pub t: usize,
    pub steps_per_domain: usize,
    pub steps: Vec<BidStep>,
    /// Steps whose raw policy output left the feasible box.
    pub clipped_steps: usize,
}

/// Least-squares non-decreasing fit (pool adjacent violators, unit weights).
pub fn isotonic_non_decreasing(values: &[f64]) -> Vec<f64> {
    // blocks of (sum, count)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (s2, c2) = blocks[blocks.len() - 1];
            let (s1, c1) = blocks[blocks.len() - 2];
            if s1 / c1 as f64 > s2 / c2 as f64 {
                blocks.pop();
                *blocks.last_mut().expect("nonempty") = (s1 + s2, c1 + c2);
            } else {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for (s, c) in blocks {
        out.extend(std::iter::repeat_n(s / c as f64, c));
    }
    out
}

pub fn isotonic_non_increasing(values: &[f64]) -> Vec<f64> {
    let neg: Vec<f64> = values.iter().map(|v| -v).collect();
    isotonic_non_decreasing(&neg).into_iter().map(|v| -v).collect()
}

/// Segment edges: the axis ends plus every domain boundary strictly inside the axis.
fn segment_edges(ps: &PolicySet, grid: &GridConfig) -> Vec<f64> {
    let mut edges = vec![grid.price_floor];
    edges.extend(
        ps.architecture
            .domains
            .cuts()
            .iter()
            .copied()
            .filter(|&c| c > grid.price_floor && c < grid.price_ceil),
    );
    edges.push(grid.price_ceil);
    edges
}

/// Bid curve for hour `t` from the policies and that hour's context features.
pub fn discretize(
    ps: &PolicySet,
    t: usize,
    context: &[f64],
    params: &PlantParams,
    grid: &GridConfig,
) -> Result<BidCurve> {
    grid.validate()?;
    ps.schema.check_context(context)?;
    let b = grid.steps_per_domain;
    let edges = segment_edges(ps, grid);
    let mut steps = Vec::with_capacity(b * (edges.len() - 1));
    let mut clipped_steps = 0;
    for seg in edges.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        let width = (hi - lo) / b as f64;
        for k in 0..b {
            let price_lo = lo + width * k as f64;
            let price_hi = if k + 1 == b { hi } else { lo + width * (k + 1) as f64 };
            let mid = 0.5 * (price_lo + price_hi);
            let (da, h) = evaluate_raw(ps, t, mid, context)?;
            let r = repair(da, h, params);
            clipped_steps += usize::from(r.clipped);
            steps.push(BidStep {
                price_lo,
                price_hi,
                p_da: r.p_da,
                p_h: r.p_h,
            });
        }
    }
    if grid.monotone {
        let da: Vec<f64> = steps.iter().map(|s| s.p_da).collect();
        let h: Vec<f64> = steps.iter().map(|s| s.p_h).collect();
        for ((s, da), h) in steps
            .iter_mut()
            .zip(isotonic_non_decreasing(&da))
            .zip(isotonic_non_increasing(&h))
        {
            s.p_da = da;
            s.p_h = h;
        }
    }
    Ok(BidCurve {
        t,
        steps_per_domain: b,
        steps,
        clipped_steps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cleared {
    pub p_da: f64,
    pub p_h: f64,
    /// The price fell outside the curve's axis and was clamped to the nearest step.
    pub clamped: bool,
}

/// Quantities of the step containing `price`.
pub fn clear(curve: &BidCurve, price: f64) -> Cleared {
    let first = curve.steps.first().expect("curve has steps");
    let last = curve.steps.last().expect("curve has steps");
    let clamped = price < first.price_lo || price > last.price_hi;
    let idx = curve
        .steps
        .partition_point(|s| s.price_hi <= price)
        .min(curve.steps.len() - 1);
    let s = if price < first.price_lo { first } else { &curve.steps[idx] };
    Cleared {
        p_da: s.p_da,
        p_h: s.p_h,
        clamped,
    }
}

/// Writes curves in submission format: `hour,price_lo,price_hi,p_da,p_h`.
pub fn write_bids_csv<W: Write>(curves: &[BidCurve], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["hour", "price_lo", "price_hi", "p_da", "p_h"])?;
    for c in curves {
        for s in &c.steps {
            w.write_record([
                c.t.to_string(),
                s.price_lo.to_string(),
                s.price_hi.to_string(),
                s.p_da.to_string(),
                s.p_h.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<bids output>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureVariant;
    use crate::policy::{Architecture, TrainingMeta};

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

    fn grid(monotone: bool) -> GridConfig {
        GridConfig {
            steps_per_domain: 5,
            price_floor: 0.0,
            price_ceil: 100.0,
            monotone,
        }
    }

    #[test]
    fn midpoint_quantities() {
        let c = discretize(&ga(vec![0.0, 0.1, 0.0], vec![0.0; 3]), 0, &[2.0], &params(), &grid(true)).unwrap();
        let q: Vec<f64> = c.steps.iter().map(|s| s.p_da).collect();
        for (a, b) in q.iter().zip([1.0, 3.0, 5.0, 7.0, 9.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(c.steps[2].price_lo, 40.0);
        assert_eq!(c.steps[4].price_hi, 100.0);
    }

    #[test]
    fn decreasing_supply_is_flattened() {
        let ps = ga(vec![0.0, -0.1, 10.0], vec![0.0; 3]);
        let c = discretize(&ps, 0, &[2.0], &params(), &grid(true)).unwrap();
        assert!(c.steps.iter().all(|s| (s.p_da - 5.0).abs() < 1e-12));
        let raw = discretize(&ps, 0, &[2.0], &params(), &grid(false)).unwrap();
        assert!((raw.steps[0].p_da - 9.0).abs() < 1e-12);
    }

    #[test]
    fn electrolyzer_steps_are_clipped() {
        let c = discretize(&ga(vec![0.0; 3], vec![0.0, 0.0, 7.0]), 0, &[2.0], &params(), &grid(true)).unwrap();
        assert!(c.steps.iter().all(|s| s.p_h == 5.0));
        assert_eq!(c.clipped_steps, 5);
    }

    #[test]
    fn domains_split_the_axis() {
        let arch = Architecture::with_domains(
            false,
            crate::features::PriceDomains::new(vec![40.0, 90.0]).unwrap(),
        );
        let ps = PolicySet::new(
            FeatureVariant::RF.schema(),
            arch,
            vec![vec![0.0, 0.0, 1.0]; 6],
            None,
            TrainingMeta::default(),
        )
        .unwrap();
        let c = discretize(&ps, 0, &[2.0], &params(), &GridConfig::default()).unwrap();
        assert_eq!(c.steps.len(), 30);
        assert_eq!(c.steps[10].price_lo, 40.0);
        assert_eq!(c.steps[20].price_lo, 90.0);
        for w in c.steps.windows(2) {
            assert_eq!(w[0].price_hi, w[1].price_lo);
        }
    }

    #[test]
    fn clearing_boundaries_and_clamp() {
        let curve = BidCurve {
            t: 0,
            steps_per_domain: 2,
            steps: vec![
                BidStep { price_lo: 0.0, price_hi: 50.0, p_da: 2.0, p_h: 0.0 },
                BidStep { price_lo: 50.0, price_hi: 100.0, p_da: 6.0, p_h: 0.0 },
            ],
            clipped_steps: 0,
        };
        assert_eq!(clear(&curve, 50.0).p_da, 6.0);
        assert_eq!(clear(&curve, 49.999).p_da, 2.0);
        let low = clear(&curve, -600.0);
        assert_eq!((low.p_da, low.clamped), (2.0, true));
        let high = clear(&curve, 120.0);
        assert_eq!((high.p_da, high.clamped), (6.0, true));
        let top = clear(&curve, 100.0);
        assert_eq!((top.p_da, top.clamped), (6.0, false));
    }

    #[test]
    fn pav_examples() {
        assert_eq!(isotonic_non_decreasing(&[9.0, 7.0, 5.0, 3.0, 1.0]), vec![5.0; 5]);
        assert_eq!(isotonic_non_decreasing(&[1.0, 3.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(isotonic_non_increasing(&[1.0, 3.0, 2.0]), vec![2.0, 2.0, 2.0]);
        assert!(isotonic_non_decreasing(&[]).is_empty());
    }
}
