//! Battery valuation.
//!
//! A battery trades the hourly products of one session: product `i` is bought or sold once,
//! one hour before its delivery. [`optimize`] learns a policy by regression-based backward
//! induction on simulated paths, [`backtest`] applies it to observed trades, and
//! [`spot_strategy`] gives the deterministic schedule that is optimal for the day-ahead
//! prices.

mod backtest;
mod campaign;
pub mod io;
mod optimize;
mod regression;
mod schedule;
mod spec;
mod spot;
mod training;

pub use backtest::{backtest, execute_controls, spot_backtest, BacktestDay, PriceSource};
pub use campaign::{
    backtest_campaign, synthetic_day_ahead, synthetic_market, training_seed, write_annual_csv, AnnualRow,
    CampaignConfig, DailyGain, SpotPrices, Strategy, SyntheticMarket, ValuationReport, WeeklyParams,
};
pub use optimize::{optimize, optimize_on, Optimization, OptimizationSummary, Policy, PATHS_PER_CELL};
pub use regression::{LocalLinearFit, MeshSpec};
pub use schedule::{DecisionSchedule, FeatureTiming, DEFAULT_DELAY, MAX_FEATURES};
pub use spec::{admissible_controls, cashflow, BatterySpec, CONTROL_ORDER};
pub use spot::{spot_strategy, SpotSolution};
pub use training::TrainingSet;
