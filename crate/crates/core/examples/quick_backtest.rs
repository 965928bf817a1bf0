//! Generates a small synthetic market and compares two policy architectures
//! against the deterministic benchmark.
//!
//! ```text
//! cargo run --release -p h2bid --example quick_backtest
//! ```

use h2bid::backtest::{run_backtest, run_deterministic, BacktestConfig, Stage};
use h2bid::data_io::{synthetic_market, SynthConfig};
use h2bid::features::FeatureVariant;
use h2bid::realtime::EstimateMode;
use h2bid::PlantParams;

fn main() -> h2bid::Result<()> {
    let plant = PlantParams::new(10.0, 5.0, 20.0, 2.0, 400.0)?;
    let market = SynthConfig {
        days: 40,
        ..SynthConfig::default()
    };
    let data = synthetic_market(&plant, &market, 7)?;

    let window = 20;
    for (hourly, price_domains) in [(false, false), (true, true)] {
        let cfg = BacktestConfig {
            window_days: window,
            retrain_days: 5,
            hourly,
            price_domains,
            features: FeatureVariant::RF,
            ..BacktestConfig::default()
        };
        let report = run_backtest(&data, &plant, &cfg)?;
        println!(
            "{:<10} day-ahead {:>10.0}  adjusted {:>10.0}  retrains {}",
            report.model,
            report.total(Stage::Unadjusted),
            report.total(Stage::Adjusted),
            report.retrains,
        );
    }
    let det = run_deterministic(&data, &plant, window, true, EstimateMode::Perfect)?;
    println!("{:<10} {:>31.0}", "Det", det.total(Stage::Adjusted));
    Ok(())
}
