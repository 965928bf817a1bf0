mod common;

use common::*;
use h2bid::benchmarks::{deterministic_day, hindsight_day, optimal_adjustment_outcomes};
use h2bid::bidding::{clear, discretize, GridConfig};
use h2bid::data_io::{fit_error_model, generate_forecasts, read_dataset, write_dataset, Dataset, DatasetRow, ErrorMode};
use h2bid::features::{domain_index, FeatureVariant, PriceDomains};
use h2bid::policy::{evaluate_raw, repair, Architecture, PolicySet, TrainingMeta};
use h2bid::realtime::{adjust_day, settle_hour};
use h2bid::training::{replay, train, TrainingWindow};
use h2bid::{hour_of_day, day_of, MarketHour, PlantParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_policy(rng: &mut ChaCha8Rng, hourly: bool, cuts: Vec<f64>) -> PolicySet {
    let arch = Architecture::with_domains(hourly, PriceDomains::new(cuts).unwrap());
    let coeffs = (0..arch.keys().len())
        .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    PolicySet::new(FeatureVariant::RF.schema(), arch, coeffs, None, TrainingMeta::default()).unwrap()
}

fn random_day(rng: &mut ChaCha8Rng, p: &PlantParams, strict: bool) -> Vec<MarketHour> {
    (0..24).map(|t| random_hour(rng, t, p, strict)).collect()
}

fn random_schedule(rng: &mut ChaCha8Rng, p: &PlantParams) -> Vec<(f64, f64)> {
    (0..24)
        .map(|_| {
            (
                rng.random_range(-p.electrolyzer_capacity..=p.wind_capacity),
                rng.random_range(0.0..=p.electrolyzer_capacity),
            )
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hour_indexing_is_consistent(t in 0usize..1_000_000) {
        prop_assert_eq!(t, 24 * day_of(t) + hour_of_day(t));
        prop_assert!(hour_of_day(t) < 24);
    }

    #[test]
    fn domains_cover_every_price_once(mut cuts in prop::collection::vec(-100.0f64..200.0, 0..5), price in -1e4f64..1e4) {
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let d = PriceDomains::new(cuts.clone()).unwrap();
        let i = domain_index(&d, price);
        prop_assert!(i < d.count());
        let (lo, hi) = d.bounds(i);
        prop_assert!(lo <= price && price < hi);
        let hits = (0..d.count()).filter(|&j| { let (a, b) = d.bounds(j); a <= price && price < b }).count();
        prop_assert_eq!(hits, 1);
    }

    #[test]
    fn policies_are_linear_in_price_within_a_domain(seed in any::<u64>(), t in 0usize..200, a in 0.0f64..1.0, ctx in 0.0f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ps = random_policy(&mut rng, true, vec![40.0, 90.0]);
        let (l1, l2) = (rng.random_range(40.0..90.0), rng.random_range(40.0..90.0));
        let mix = a * l1 + (1.0 - a) * l2;
        let (d1, h1) = evaluate_raw(&ps, t, l1, &[ctx]).unwrap();
        let (d2, h2) = evaluate_raw(&ps, t, l2, &[ctx]).unwrap();
        let (dm, hm) = evaluate_raw(&ps, t, mix, &[ctx]).unwrap();
        prop_assert!((dm - (a * d1 + (1.0 - a) * d2)).abs() < 1e-9);
        prop_assert!((hm - (a * h1 + (1.0 - a) * h2)).abs() < 1e-9);
    }

    #[test]
    fn general_policies_ignore_the_hour(seed in any::<u64>(), t1 in 0usize..500, t2 in 0usize..500, price in -100.0f64..300.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ps = random_policy(&mut rng, false, vec![40.0]);
        prop_assert_eq!(evaluate_raw(&ps, t1, price, &[3.0]).unwrap(), evaluate_raw(&ps, t2, price, &[3.0]).unwrap());
    }

    #[test]
    fn repair_is_idempotent_and_keeps_feasible_points(da in -50.0f64..50.0, h in -50.0f64..50.0) {
        let p = plant(0.0);
        let r = repair(da, h, &p);
        prop_assert!((-5.0..=10.0).contains(&r.p_da) && (0.0..=5.0).contains(&r.p_h));
        let again = repair(r.p_da, r.p_h, &p);
        prop_assert_eq!((again.p_da, again.p_h, again.clipped), (r.p_da, r.p_h, false));
        if (-5.0..=10.0).contains(&da) && (0.0..=5.0).contains(&h) {
            prop_assert_eq!((r.p_da, r.p_h, r.clipped), (da, h, false));
        }
    }

    #[test]
    fn bid_curves_partition_the_axis(seed in any::<u64>(), b in 1usize..12, monotone in any::<bool>(), t in 0usize..48) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = plant(0.0);
        let ps = random_policy(&mut rng, true, vec![40.0, 90.0]);
        let grid = GridConfig { steps_per_domain: b, monotone, ..GridConfig::default() };
        let c = discretize(&ps, t, &[rng.random_range(0.0..10.0)], &p, &grid).unwrap();
        prop_assert_eq!(c.steps.len(), 3 * b);
        prop_assert_eq!(c.steps[0].price_lo, grid.price_floor);
        prop_assert_eq!(c.steps.last().unwrap().price_hi, grid.price_ceil);
        for w in c.steps.windows(2) {
            prop_assert_eq!(w[0].price_hi, w[1].price_lo);
            prop_assert!(w[0].price_lo < w[0].price_hi);
            if monotone {
                prop_assert!(w[0].p_da <= w[1].p_da + 1e-12);
                prop_assert!(w[0].p_h >= w[1].p_h - 1e-12);
            }
        }
        for s in &c.steps {
            prop_assert!((-5.0 - 1e-12..=10.0 + 1e-12).contains(&s.p_da));
            prop_assert!((-1e-12..=5.0 + 1e-12).contains(&s.p_h));
        }
        // any price, including ones off the axis, clears exactly one step
        let price = rng.random_range(-800.0..3500.0);
        let cl = clear(&c, price);
        let inside = grid.price_floor <= price && price <= grid.price_ceil;
        prop_assert_eq!(cl.clamped, !inside);
        if inside {
            let hits: Vec<_> = c.steps.iter().enumerate()
                .filter(|(i, s)| s.price_lo <= price && (price < s.price_hi || (*i == c.steps.len() - 1 && price == s.price_hi)))
                .collect();
            prop_assert_eq!(hits.len(), 1);
            prop_assert_eq!((cl.p_da, cl.p_h), (hits[0].1.p_da, hits[0].1.p_h));
        }
    }

    #[test]
    fn unprojected_steps_stay_close_to_the_policy(seed in any::<u64>(), t in 0usize..48) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = plant(0.0);
        let ps = random_policy(&mut rng, true, vec![40.0, 90.0]);
        let grid = GridConfig { steps_per_domain: 7, monotone: false, ..GridConfig::default() };
        let ctx = [rng.random_range(0.0..10.0)];
        let c = discretize(&ps, t, &ctx, &p, &grid).unwrap();
        for s in &c.steps {
            let mid = 0.5 * (s.price_lo + s.price_hi);
            let (da, h) = evaluate_raw(&ps, t, mid, &ctx).unwrap();
            let r = repair(da, h, &p);
            prop_assert_eq!((clear(&c, mid).p_da, clear(&c, mid).p_h), (r.p_da, r.p_h));
            let lam = rng.random_range(s.price_lo..s.price_hi);
            let (da2, _) = evaluate_raw(&ps, t, lam, &ctx).unwrap();
            let q_l = ps.q(h2bid::policy::Product::DA, t, mid)[1];
            let bound = q_l.abs() * (s.price_hi - s.price_lo) / 2.0;
            prop_assert!((repair(da2, 0.0, &p).p_da - s.p_da).abs() <= bound + 1e-9);
        }
    }

    #[test]
    fn settlement_splits_imbalance(da in -5.0f64..10.0, h in 0.0f64..5.0, seed in any::<u64>()) {
        let p = plant(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_hour(&mut rng, 0, &p, false);
        let o = settle_hour(da, h, &m, &p);
        prop_assert!(o.over >= 0.0 && o.under >= 0.0 && o.over * o.under == 0.0);
        prop_assert!((o.over - o.under - (m.wind_actual - da - h)).abs() < 1e-9);
        prop_assert!((o.profit() - o.terms.total()).abs() < 1e-12);
        prop_assert!((o.profit() - hour_profit(da, h, &m, &p)).abs() < 1e-9);
    }

    #[test]
    fn guarded_adjustment_delivers_the_quota(seed in any::<u64>(), quota in 0.0f64..2400.0, noisy in any::<bool>()) {
        let p = plant(quota);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let day = random_day(&mut rng, &p, false);
        let sched = random_schedule(&mut rng, &p);
        let est: Vec<(f64, f64)> = day.iter().map(|h| if noisy {
            let up = rng.random_range(-20.0..100.0);
            (up, up + rng.random_range(0.0..30.0))
        } else { (h.lambda_up, h.lambda_dw) }).collect();
        let out = adjust_day(&sched, &day, &est, &p, true).unwrap();
        let delivered: f64 = out.iter().map(|o| p.efficiency * o.p_h_adjusted).sum();
        prop_assert!(delivered >= quota - 1e-9);
        prop_assert!(out.iter().all(|o| (0.0..=5.0).contains(&o.p_h_adjusted)));
    }

    #[test]
    fn rule_adjustment_never_beats_optimal_adjustment(seed in any::<u64>(), quota in 0.0f64..1200.0) {
        let p = plant(quota);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let day = random_day(&mut rng, &p, false);
        let sched = random_schedule(&mut rng, &p);
        let est: Vec<(f64, f64)> = day.iter().map(|h| (h.lambda_up, h.lambda_dw)).collect();
        let rule: f64 = adjust_day(&sched, &day, &est, &p, true).unwrap().iter().map(|o| o.profit()).sum();
        let opt: f64 = optimal_adjustment_outcomes(&sched, &day, &p).unwrap().iter().map(|o| o.profit()).sum();
        prop_assert!(rule <= opt + 1e-6, "{} > {}", rule, opt);
    }

    #[test]
    fn hindsight_never_plans_imbalance_under_strict_pricing(seed in any::<u64>(), quota in 0.0f64..2400.0) {
        let p = plant(quota);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let day = random_day(&mut rng, &p, true);
        let (sched, profit) = hindsight_day(&day, &p).unwrap();
        let mut total = 0.0;
        for (&(da, h), m) in sched.iter().zip(&day) {
            let o = settle_hour(da, h, m, &p);
            prop_assert!(o.over < 1e-7 && o.under < 1e-7);
            total += o.profit();
        }
        prop_assert!((total - profit).abs() < 1e-4);
        // Det with perfect forecasts reaches the same objective
        let prices: Vec<f64> = day.iter().map(|h| h.lambda_da).collect();
        let wind: Vec<f64> = day.iter().map(|h| h.wind_actual).collect();
        let det: f64 = deterministic_day(&prices, &wind, &p).unwrap().iter().zip(&day).map(|(&(da, h), m)| settle_hour(da, h, m, &p).profit()).sum();
        prop_assert!((det - profit).abs() < 1e-4 * profit.abs().max(1.0));
    }

    #[test]
    fn policy_json_round_trip(seed in any::<u64>(), hourly in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cut = rng.random_range(-10.0..40.0);
        let ps = random_policy(&mut rng, hourly, vec![cut, 55.123456789]);
        prop_assert_eq!(PolicySet::from_json(&ps.to_json().unwrap()).unwrap(), ps);
    }

    #[test]
    fn dataset_round_trip(seed in any::<u64>(), days in 1usize..4, af in any::<bool>()) {
        let p = plant(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ds = Dataset { rows: (0..24 * days).map(|t| {
            let m = random_hour(&mut rng, t, &p, false);
            DatasetRow {
                timestamp: timestamp(t),
                market: m,
                wind_forecast: rng.random_range(0.0..10.0),
                da_price_forecast: rng.random_range(-50.0..150.0),
                af: af.then(|| [rng.random(), rng.random(), rng.random(), rng.random()]),
            }
        }).collect() };
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf).unwrap();
        prop_assert_eq!(read_dataset(&buf[..], "mem", &p).unwrap(), ds);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn learned_policies_respect_training_constraints(seed in any::<u64>(), days in 1usize..3, hourly in any::<bool>(), pd in any::<bool>(), quota in 0.0f64..2400.0) {
        let p = plant(quota);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hours: Vec<MarketHour> = (0..24 * days).map(|t| {
            let strict = rng.random();
            random_hour(&mut rng, t, &p, strict)
        }).collect();
        let ctx: Vec<Vec<f64>> = hours.iter().map(|h| vec![(h.wind_actual + rng.random_range(-2.0..2.0)).clamp(0.0, 10.0)]).collect();
        let w = TrainingWindow::new(hours, ctx).unwrap();
        let cuts = if pd { vec![40.0, 80.0] } else { vec![] };
        let arch = Architecture::with_domains(hourly, PriceDomains::new(cuts).unwrap());
        let (ps, rep) = train(&w, &arch, &FeatureVariant::RF.schema(), &p).unwrap();
        let sched = replay(&ps, &w).unwrap();
        for (da, h) in &sched {
            prop_assert!(*h >= -1e-6 && *h <= 5.0 + 1e-6);
            prop_assert!(*da >= -5.0 - 1e-6 && *da <= 10.0 + 1e-6);
        }
        for d in 0..days {
            let e: f64 = sched[24 * d..24 * (d + 1)].iter().map(|s| s.1).sum();
            prop_assert!(p.efficiency * e >= quota - 1e-6);
        }
        // objective audit and complementarity of the recomputed settlement
        let recomputed: f64 = sched.iter().zip(&w.hours).map(|(&(da, h), m)| hour_profit(da, h, m, &p)).sum();
        prop_assert!((recomputed - rep.objective).abs() < 1e-4);
        prop_assert!((rep.terms.total() - rep.solver_objective).abs() < 1e-4 * rep.solver_objective.abs().max(1.0));
        // richer architectures never do worse in sample
        let (_, ga) = train(&w, &Architecture::general(), &FeatureVariant::RF.schema(), &p).unwrap();
        prop_assert!(rep.objective >= ga.objective - 1e-6 * ga.objective.abs().max(1.0));
    }
}

#[test]
fn synthetic_residuals_match_the_fitted_model() {
    for seed in 0..6u64 {
        let gaussian = seed % 2 == 0;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pairs: Vec<(f64, f64)> = (0..500).map(|_| {
            let a: f64 = rng.random_range(0.0..10.0);
            (a - rng.random_range(-1.0..2.0), a)
        }).collect();
        let mode = if gaussian { ErrorMode::Gaussian } else { ErrorMode::Bootstrap };
        let m = fit_error_model(&pairs, mode, seed).unwrap();
        let actual: Vec<f64> = (0..2000).map(|i| 1000.0 + i as f64).collect();
        let fc = generate_forecasts(&actual, &m, None);
        let res: Vec<f64> = actual.iter().zip(&fc).map(|(a, f)| a - f).collect();
        let n = res.len() as f64;
        let mean = res.iter().sum::<f64>() / n;
        let var = res.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
        let se = m.std_dev / n.sqrt();
        assert!((mean - m.mean).abs() <= 3.0 * se);
        // sample variance has standard error sqrt((m4 - sigma^4) / n)
        let s2 = m.std_dev.powi(2);
        let m4 = if gaussian {
            3.0 * s2 * s2
        } else {
            m.residuals.iter().map(|r| (r - m.mean).powi(4)).sum::<f64>() / m.residuals.len() as f64
        };
        assert!((var - s2).abs() <= 3.0 * ((m4 - s2 * s2) / n).sqrt());
    }
}
