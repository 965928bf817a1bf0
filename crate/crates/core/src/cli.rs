//! Command-line front end: `train`, `bid`, `backtest`, `compare` and `synth`.
//!
//! Settings come from a TOML run configuration; every section is optional.
//!
//! ```toml
//! seed = 42
//!
//! [plant]
//! wind_capacity = 10.0
//! electrolyzer_capacity = 5.0
//! efficiency = 20.0
//! hydrogen_price = 2.0
//! daily_quota = 400.0
//!
//! [model]
//! hourly = true
//! price_domains = true
//! features = "RF"
//!
//! [grid]
//! steps_per_domain = 10
//!
//! [backtest]
//! window_days = 180
//! retrain_days = 7
//!
//! [paths]
//! data = "market.csv"
//! out_dir = "out"
//! ```

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::backtest::{
    compare_models, train_for_day, window_sweep, write_comparison_csv, write_daily_csv, write_hourly_csv,
    write_sweep_csv, BacktestConfig, BacktestReport, ComparisonRow,
};
use crate::bidding::{discretize, write_bids_csv, GridConfig};
use crate::data_io::{
    fit_error_model, generate_forecasts, load_dataset, load_raw, parse_timestamp, save_dataset, synthetic_market,
    Dataset, DatasetRow, ErrorMode, SynthConfig, AF_EXTRA_COLUMNS,
};
use crate::error::{Error, Result};
use crate::features::{apply_forecast_model, FeatureVariant};
use crate::policy::PolicySet;
use crate::realtime::EstimateMode;
use crate::types::PlantParams;

/// Environment variable overriding `paths.out_dir`.
pub const OUT_DIR_ENV: &str = "H2BID_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub hourly: bool,
    pub price_domains: bool,
    pub features: FeatureVariant,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            hourly: true,
            price_domains: true,
            features: FeatureVariant::RF,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BacktestSection {
    pub window_days: usize,
    pub retrain_days: usize,
    pub strict_guard: bool,
    pub estimates: EstimateMode,
}

impl Default for BacktestSection {
    fn default() -> Self {
        let d = BacktestConfig::default();
        BacktestSection {
            window_days: d.window_days,
            retrain_days: d.retrain_days,
            strict_guard: d.strict_guard,
            estimates: d.estimates,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    /// Model labels such as `GA/RF` or `HA+PD/FM`.
    pub models: Vec<String>,
    /// Training window lengths swept for the configured model; empty to skip.
    pub windows: Vec<usize>,
}

impl Default for CompareSection {
    fn default() -> Self {
        CompareSection {
            models: ["GA/RF", "HA/RF", "GA+PD/RF", "HA+PD/RF"].map(String::from).to_vec(),
            windows: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub error_mode: ErrorMode,
    /// Settings used by `synth --generate`.
    pub market: SynthConfig,
}

impl Default for SynthSection {
    fn default() -> Self {
        SynthSection {
            error_mode: ErrorMode::Bootstrap,
            market: SynthConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub data: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for PathsSection {
    fn default() -> Self {
        PathsSection {
            data: None,
            out_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub plant: PlantParams,
    pub model: ModelSection,
    pub grid: GridConfig,
    pub backtest: BacktestSection,
    pub compare: CompareSection,
    pub synth: SynthSection,
    pub paths: PathsSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            plant: PlantParams {
                wind_capacity: 10.0,
                electrolyzer_capacity: 5.0,
                efficiency: 20.0,
                hydrogen_price: 2.0,
                daily_quota: 400.0,
            },
            model: ModelSection::default(),
            grid: GridConfig::default(),
            backtest: BacktestSection::default(),
            compare: CompareSection::default(),
            synth: SynthSection::default(),
            paths: PathsSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(d) = &cfg.paths.data {
            if d.is_relative() {
                cfg.paths.data = Some(base.join(d));
            }
        }
        if cfg.paths.out_dir.is_relative() {
            cfg.paths.out_dir = base.join(&cfg.paths.out_dir);
        }
        if let Some(d) = &cfg.paths.data {
            if !d.exists() {
                return Err(Error::io(d, std::io::ErrorKind::NotFound.into()));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.validate()?;
        self.backtest_config().validate()?;
        for m in &self.compare.models {
            parse_model_label(m)?;
        }
        if self.compare.windows.contains(&0) {
            return Err(Error::InvalidInput("compare.windows entries must be >= 1".into()));
        }
        Ok(())
    }

    pub fn backtest_config(&self) -> BacktestConfig {
        BacktestConfig {
            window_days: self.backtest.window_days,
            retrain_days: self.backtest.retrain_days,
            hourly: self.model.hourly,
            price_domains: self.model.price_domains,
            features: self.model.features,
            grid: self.grid,
            strict_guard: self.backtest.strict_guard,
            estimates: self.backtest.estimates,
        }
    }

    /// Disables the quota guard and the monotone projection.
    pub fn make_faithful(&mut self) {
        self.backtest.strict_guard = false;
        self.grid.monotone = false;
    }
}

/// Parses `GA/RF`, `HA+PD/FM` and the like into `(hourly, price_domains, features)`.
pub fn parse_model_label(label: &str) -> Result<(bool, bool, FeatureVariant)> {
    let bad = || Error::InvalidInput(format!("unknown model {label:?} (expected e.g. HA+PD/RF)"));
    let (arch, feat) = label.split_once('/').ok_or_else(bad)?;
    let (hourly, pd) = match arch {
        "GA" => (false, false),
        "HA" => (true, false),
        "GA+PD" => (false, true),
        "HA+PD" => (true, true),
        _ => return Err(bad()),
    };
    Ok((hourly, pd, feat.parse()?))
}

#[derive(Debug, Parser)]
#[command(name = "h2bid", version, about = "Day-ahead bidding for a wind farm with an electrolyzer")]
pub struct Cli {
    /// TOML run configuration; defaults are used when omitted
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (beats H2BID_OUT_DIR and the config)
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Turn off the quota guard and monotone bid projection
    #[arg(long, global = true)]
    pub faithful: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct DataArg {
    /// Market data CSV (overrides paths.data)
    #[arg(long, value_name = "FILE")]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train policies on the last window of the data and write policy.json
    Train(DataArg),
    /// Build 24 hourly bid curves from a policy file and a day of features
    Bid {
        #[arg(long, value_name = "FILE")]
        policy: PathBuf,
        /// CSV with timestamp,wind_forecast[,on_dk1,on_dk2,off_dk1,off_dk2]
        #[arg(long, value_name = "FILE")]
        features: PathBuf,
    },
    /// Backtest the configured model against Det and Hindsight
    Backtest(DataArg),
    /// Backtest every model in [compare] and optionally sweep window lengths
    Compare(DataArg),
    /// Generate synthetic forecasts from real data, or a whole synthetic market
    Synth {
        #[command(flatten)]
        data: DataArg,
        /// Generate a synthetic market instead of reading data
        #[arg(long, conflicts_with = "data")]
        generate: bool,
    },
}

/// Parses arguments, runs the command and returns the process exit code.
///
/// 0 on success, 2 for usage errors and missing input files, 1 for anything else.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(summary) => {
            print!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => 2,
        _ => 1,
    }
}

/// Runs a parsed command and returns the text summary it prints.
pub fn execute(cli: &Cli) -> Result<String> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cli.faithful {
        cfg.make_faithful();
    }
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| cfg.paths.out_dir.clone());
    fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    match &cli.command {
        Command::Train(d) => cmd_train(&cfg, &data_path(&cfg, d)?, &out_dir),
        Command::Bid { policy, features } => cmd_bid(&cfg, policy, features, &out_dir),
        Command::Backtest(d) => cmd_backtest(&cfg, &data_path(&cfg, d)?, &out_dir),
        Command::Compare(d) => cmd_compare(&cfg, &data_path(&cfg, d)?, &out_dir),
        Command::Synth { data, generate } => {
            if *generate {
                cmd_generate(&cfg, &out_dir)
            } else {
                cmd_synth(&cfg, &data_path(&cfg, data)?, &out_dir)
            }
        }
    }
}

fn data_path(cfg: &RunConfig, arg: &DataArg) -> Result<PathBuf> {
    let p = arg
        .data
        .clone()
        .or_else(|| cfg.paths.data.clone())
        .ok_or_else(|| Error::InvalidInput("no data file: pass --data or set paths.data".into()))?;
    if !p.exists() {
        return Err(Error::io(p, std::io::ErrorKind::NotFound.into()));
    }
    Ok(p)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn cmd_train(cfg: &RunConfig, data: &Path, out_dir: &Path) -> Result<String> {
    let ds = load_dataset(data, &cfg.plant)?;
    let bt = cfg.backtest_config();
    let (ps, report) = train_for_day(&ds, &cfg.plant, &bt, ds.num_days())?;
    let policy_path = out_dir.join("policy.json");
    ps.save(&policy_path)?;
    let mut s = String::new();
    let _ = writeln!(s, "model = {}", bt.label());
    let _ = writeln!(s, "window_days = {}", bt.window_days);
    let _ = writeln!(s, "first_day = {}", ds.num_days() - bt.window_days);
    let _ = writeln!(s, "objective = {}", report.objective);
    let _ = writeln!(s, "solver_objective = {}", report.solver_objective);
    let _ = writeln!(s, "status = {:?}", report.status);
    let _ = writeln!(s, "relaxed = {}", report.relaxed);
    let _ = writeln!(s, "day_ahead = {}", report.terms.da);
    let _ = writeln!(s, "hydrogen = {}", report.terms.hydrogen);
    let _ = writeln!(s, "up = {}", report.terms.up);
    let _ = writeln!(s, "down = {}", report.terms.down);
    let _ = writeln!(s, "variables = {}", report.variables);
    let _ = writeln!(s, "constraints = {}", report.constraints);
    write_text(&out_dir.join("training_report.txt"), &s)?;
    let _ = writeln!(s, "policy written to {}", policy_path.display());
    Ok(s)
}

/// One row of a bid features file.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub hour: usize,
    pub wind_forecast: f64,
    pub af: Option<[f64; 4]>,
}

/// Reads `timestamp,wind_forecast[,on_dk1,on_dk2,off_dk1,off_dk2]`, exactly 24 consecutive hours.
pub fn load_feature_rows(path: &Path) -> Result<Vec<FeatureRow>> {
    let name = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    let mut af_header = vec!["timestamp".to_string(), "wind_forecast".to_string()];
    af_header.extend(AF_EXTRA_COLUMNS.iter().map(|s| s.to_string()));
    let has_af = if header == af_header[..2] {
        false
    } else if header == af_header {
        true
    } else {
        return Err(Error::SchemaMismatch(format!(
            "{name}: header {header:?} must be {:?} or {:?}",
            &af_header[..2],
            af_header
        )));
    };
    let mut rows = Vec::new();
    let mut prev = None;
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec?;
        let perr = |msg: String| Error::Parse {
            file: name.clone(),
            line,
            msg,
        };
        let ts = parse_timestamp(&rec[0]).map_err(|e| perr(format!("bad timestamp {:?}: {e}", &rec[0])))?;
        if let Some(p) = prev {
            if ts != p + chrono::Duration::hours(1) {
                return Err(Error::Gap {
                    file: name.clone(),
                    expected: crate::data_io::format_timestamp(&(p + chrono::Duration::hours(1))),
                    found: crate::data_io::format_timestamp(&ts),
                });
            }
        }
        prev = Some(ts);
        let mut vals = Vec::with_capacity(rec.len() - 1);
        for (j, cell) in rec.iter().enumerate().skip(1) {
            let v: f64 = cell
                .parse()
                .map_err(|_| perr(format!("column {}: {cell:?} is not a number", header[j])))?;
            if !v.is_finite() {
                return Err(perr(format!("column {} is not finite", header[j])));
            }
            vals.push(v);
        }
        rows.push(FeatureRow {
            hour: chrono::Timelike::hour(&ts) as usize,
            wind_forecast: vals[0],
            af: has_af.then(|| [vals[1], vals[2], vals[3], vals[4]]),
        });
    }
    if rows.len() != 24 {
        return Err(Error::InvalidInput(format!("{name}: expected 24 hourly rows, found {}", rows.len())));
    }
    Ok(rows)
}

fn feature_context(ps: &PolicySet, row: &FeatureRow, params: &PlantParams) -> Result<Vec<f64>> {
    let af = || {
        row.af.map(|a| [&[row.wind_forecast][..], &a[..]].concat()).ok_or_else(|| {
            Error::SchemaMismatch(format!(
                "{} policy needs the AF columns {:?}",
                ps.schema.variant, AF_EXTRA_COLUMNS
            ))
        })
    };
    match ps.schema.variant {
        FeatureVariant::RF => Ok(vec![row.wind_forecast]),
        FeatureVariant::AF => af(),
        FeatureVariant::FM => {
            let model = ps
                .forecast_model
                .as_ref()
                .ok_or_else(|| Error::SchemaMismatch("FM policy file has no forecast model".into()))?;
            Ok(vec![apply_forecast_model(model, &af()?, params.wind_capacity)?])
        }
    }
}

pub fn cmd_bid(cfg: &RunConfig, policy: &Path, features: &Path, out_dir: &Path) -> Result<String> {
    let ps = PolicySet::load(policy)?;
    let rows = load_feature_rows(features)?;
    let curves = rows
        .iter()
        .map(|r| discretize(&ps, r.hour, &feature_context(&ps, r, &cfg.plant)?, &cfg.plant, &cfg.grid))
        .collect::<Result<Vec<_>>>()?;
    let path = out_dir.join("bids.csv");
    write_bids_csv(&curves, create(&path)?)?;
    let steps: usize = curves.iter().map(|c| c.steps.len()).sum();
    let clipped: usize = curves.iter().map(|c| c.clipped_steps).sum();
    Ok(format!(
        "{} bid steps for 24 hours written to {} ({clipped} clipped)\n",
        steps,
        path.display()
    ))
}

fn summarize(rows: &[ComparisonRow], reports: &[BacktestReport]) -> String {
    let mut s = String::new();
    if let Some(r) = reports.first() {
        let _ = writeln!(s, "test days: {}..{}", r.first_test_day, r.first_test_day + r.days.len());
    }
    let _ = writeln!(s, "{:<12} {:<20} {:>14}", "model", "stage", "profit");
    for r in rows {
        let _ = writeln!(s, "{:<12} {:<20} {:>14.2}", r.model, r.stage, r.total());
    }
    for r in reports {
        let _ = writeln!(
            s,
            "{}: quota violations = {}, clipped steps = {}, clamped hours = {}, retrains = {}",
            r.model, r.quota_violations, r.clipped_steps, r.clamped_hours, r.retrains
        );
    }
    s
}

fn write_reports(out_dir: &Path, rows: &[ComparisonRow], reports: &[BacktestReport]) -> Result<String> {
    write_comparison_csv(rows, create(&out_dir.join("comparison.csv"))?)?;
    write_daily_csv(reports, create(&out_dir.join("daily.csv"))?)?;
    write_hourly_csv(reports, create(&out_dir.join("hourly.csv"))?)?;
    let summary = summarize(rows, reports);
    write_text(&out_dir.join("summary.txt"), &summary)?;
    Ok(summary)
}

pub fn cmd_backtest(cfg: &RunConfig, data: &Path, out_dir: &Path) -> Result<String> {
    let ds = load_dataset(data, &cfg.plant)?;
    let (rows, reports) = compare_models(&ds, &cfg.plant, &[cfg.backtest_config()])?;
    write_reports(out_dir, &rows, &reports)
}

pub fn cmd_compare(cfg: &RunConfig, data: &Path, out_dir: &Path) -> Result<String> {
    let ds = load_dataset(data, &cfg.plant)?;
    let base = cfg.backtest_config();
    let configs = cfg
        .compare
        .models
        .iter()
        .map(|m| {
            let (hourly, price_domains, features) = parse_model_label(m)?;
            Ok(BacktestConfig {
                hourly,
                price_domains,
                features,
                ..base
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (rows, reports) = compare_models(&ds, &cfg.plant, &configs)?;
    let mut summary = write_reports(out_dir, &rows, &reports)?;
    if !cfg.compare.windows.is_empty() {
        let sweep = window_sweep(&ds, &cfg.plant, &base, &cfg.compare.windows)?;
        write_sweep_csv(&base.label(), &sweep, create(&out_dir.join("window_sweep.csv"))?)?;
        for (w, da, adj) in sweep {
            let _ = writeln!(summary, "{} window {w} days: day-ahead {da:.2}, rule-adjusted {adj:.2}", base.label());
        }
    }
    Ok(summary)
}

/// Refits forecast errors on the rows that have forecasts and regenerates both forecast
/// columns for every row.
pub fn cmd_synth(cfg: &RunConfig, data: &Path, out_dir: &Path) -> Result<String> {
    let raw = load_raw(data, &cfg.plant)?;
    let wind_pairs: Vec<(f64, f64)> = raw
        .iter()
        .filter_map(|r| r.wind_forecast.map(|f| (f, r.market.wind_actual)))
        .collect();
    let price_pairs: Vec<(f64, f64)> = raw
        .iter()
        .filter_map(|r| r.da_price_forecast.map(|f| (f, r.market.lambda_da)))
        .collect();
    let wind_model = fit_error_model(&wind_pairs, cfg.synth.error_mode, cfg.seed)?;
    let price_model = fit_error_model(&price_pairs, cfg.synth.error_mode, cfg.seed.wrapping_add(1))?;
    let wind_actual: Vec<f64> = raw.iter().map(|r| r.market.wind_actual).collect();
    let price_actual: Vec<f64> = raw.iter().map(|r| r.market.lambda_da).collect();
    let wind_fc = generate_forecasts(&wind_actual, &wind_model, Some(cfg.plant.wind_capacity));
    let price_fc = generate_forecasts(&price_actual, &price_model, None);
    let rows = raw
        .into_iter()
        .zip(wind_fc.into_iter().zip(price_fc))
        .map(|(r, (w, p))| DatasetRow {
            timestamp: r.timestamp,
            market: r.market,
            wind_forecast: w,
            da_price_forecast: p,
            af: r.af,
        })
        .collect();
    let ds = Dataset { rows };
    let path = out_dir.join("synthetic.csv");
    save_dataset(&ds, &path)?;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "wind error: {} pairs, mean {:.6}, sigma {:.6}",
        wind_pairs.len(),
        wind_model.mean,
        wind_model.std_dev
    );
    let _ = writeln!(
        s,
        "price error: {} pairs, mean {:.6}, sigma {:.6}",
        price_pairs.len(),
        price_model.mean,
        price_model.std_dev
    );
    let _ = writeln!(s, "{} rows written to {}", ds.len(), path.display());
    Ok(s)
}

pub fn cmd_generate(cfg: &RunConfig, out_dir: &Path) -> Result<String> {
    let ds = synthetic_market(&cfg.plant, &cfg.synth.market, cfg.seed)?;
    let path = out_dir.join("synthetic.csv");
    save_dataset(&ds, &path)?;
    Ok(format!("{} days written to {}\n", ds.num_days(), path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_parse() {
        assert_eq!(parse_model_label("HA+PD/FM").unwrap(), (true, true, FeatureVariant::FM));
        assert_eq!(parse_model_label("GA/RF").unwrap(), (false, false, FeatureVariant::RF));
        assert!(parse_model_label("XA/RF").is_err());
        assert!(parse_model_label("GA").is_err());
    }

    #[test]
    fn config_defaults_and_overrides() {
        let cfg = RunConfig::from_toml("seed = 7\n[backtest]\nwindow_days = 30\n[grid]\nsteps_per_domain = 4\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.backtest.window_days, 30);
        assert_eq!(cfg.backtest.retrain_days, 7);
        assert_eq!(cfg.grid.steps_per_domain, 4);
        assert_eq!(cfg.grid.price_ceil, 3000.0);
        assert!(RunConfig::from_toml("bogus = 1\n").is_err());
    }

    #[test]
    fn unreachable_quota_rejected_at_load() {
        let text = "[plant]\nwind_capacity = 10.0\nelectrolyzer_capacity = 5.0\nefficiency = 20.0\nhydrogen_price = 2.0\ndaily_quota = 5000.0\n";
        assert!(matches!(RunConfig::from_toml(text), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn faithful_turns_off_engineering_additions() {
        let mut cfg = RunConfig::default();
        cfg.make_faithful();
        assert!(!cfg.backtest.strict_guard);
        assert!(!cfg.grid.monotone);
    }
}
