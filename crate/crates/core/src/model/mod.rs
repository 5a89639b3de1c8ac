//! Model parameters and the analytic formulas of the common-shock Poisson price model.
//!
//! For every maturity `T_m` the price is `f_m = f_{m,0} + f_m^+ - f_m^-`, where each signed
//! part is an idiosyncratic compound Poisson process of rate `μ e^{-κ(T_m - s)}` plus a share
//! of a common Poisson measure thinned at `μ_c e^{-κ(T_m - s)}`. A common shock therefore hits
//! the nearest alive maturities first and spreads to later ones with decreasing probability.

mod formulas;
mod json;
mod params;

pub use formulas::JumpSign;
pub use json::{default_units, JumpLawDoc, ModelParamsDoc};
pub use params::{fixtures, InitialPrices, JumpLaw, MaturityGrid, ModelParams, FIRST_DELIVERY_HOUR, TICK_SIZE};
