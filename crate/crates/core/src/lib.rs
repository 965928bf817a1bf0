//! Feature-driven day-ahead bidding for a wind farm coupled with an electrolyzer.
//!
//! Linear policies map context features and the (unknown) day-ahead price to a market
//! position and an electrolyzer schedule. They are trained on historical data with
//! [`training::train`], turned into stepwise bid curves by [`bidding::discretize`],
//! adjusted in real time with [`realtime::adjust_day`] and evaluated in a sliding-window
//! [`backtest`].

pub mod backtest;
pub mod benchmarks;
pub mod bidding;
pub mod cli;
pub mod data_io;
pub mod error;
pub mod features;
pub mod policy;
pub mod realtime;
pub mod training;
pub mod types;

pub use error::{Error, Result};
pub use types::{day_of, hour_of_day, hydrogen_value, HourlyEnergy, MarketHour, PlantParams, ProfitTerms};
