//! Simulation, calibration and storage valuation for the common-shock Poisson model of
//! multidimensional intraday electricity prices.
//!
//! * [`model`]: parameters and closed-form moments.
//! * [`simulation`]: joint path generators (thinning, compound-Poisson decomposition,
//!   diffusion limit) and batch export.
//! * [`estimation`]: tick ingestion, cleaning, realized covariation and the three-stage
//!   moment estimator.
//! * [`battery`]: regression-based dynamic programming for a battery, backtests and the
//!   deterministic day-ahead baseline.
//!
//! Times are hours on the session clock (`t = 0` at 15:00 on the day before delivery) and
//! prices are EUR/MWh. Product indices are 0-based in the API and 1-based in files.

pub mod battery;
pub mod error;
pub mod estimation;
pub mod model;
pub mod rng;
pub mod scalar;
pub mod simulation;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Working precision of the Monte Carlo and estimation layers.
pub type Real = f64;

pub type ModelParamsF64 = model::ModelParams<f64>;
pub type ModelParamsF32 = model::ModelParams<f32>;
pub type JumpLawF64 = model::JumpLaw<f64>;
pub type JumpLawF32 = model::JumpLaw<f32>;
pub type MaturityGridF64 = model::MaturityGrid<f64>;
pub type MaturityGridF32 = model::MaturityGrid<f32>;
pub type BatterySpecF64 = battery::BatterySpec<f64>;
pub type BatterySpecF32 = battery::BatterySpec<f32>;
pub type LocalLinearF64 = battery::LocalLinearFit<f64>;
pub type LocalLinearF32 = battery::LocalLinearFit<f32>;
