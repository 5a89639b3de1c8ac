//! Tick ingestion, outlier cleaning, realized covariation and the three-stage moment
//! estimator of `(κ, μ, μ_c)` and the jump law.

mod clean;
mod covariation;
mod estimate;
mod kappa;
mod rolling;
mod ticks;

pub use clean::{clean, CleaningReport, ProductCleaning, OUTLIER_SIGMAS};
pub use covariation::{
    epps_correlation, price_locf, realized_covariation, signature_plot, EstimationWindows, SampledSession,
};
pub use estimate::{
    estimate, estimate_mu_ratio, estimate_mu_sum, fit_jump_law, Diagnostics, FittedParams, MuSumFit, PairCorrelation,
};
pub use kappa::{estimate_kappa, golden_section, minimize_contrast, JumpTimes, KAPPA_MAX};
pub use rolling::{rolling_estimate, write_rolling_csv, RollingRow, RollingSchedule};
pub use ticks::{SessionTicks, Tick, TickDataset};

use chrono::{Days, NaiveDate};

use crate::error::Result;
use crate::model::ModelParams;
use crate::simulation::simulate_thinning;

/// Synthetic observed sessions: `n_sessions` thinning paths on consecutive delivery dates
/// from `first_date`, session `d` drawn from stream `d` of `seed`.
pub fn synthetic_dataset(
    params: &ModelParams,
    f0: &[f64],
    n_sessions: usize,
    first_date: NaiveDate,
    seed: u64,
) -> Result<TickDataset> {
    use rayon::prelude::*;
    let sessions = (0..n_sessions)
        .into_par_iter()
        .map(|d| {
            let path = simulate_thinning(params, f0, crate::rng::derive_seed(seed, 0x7e57, d as u64))?;
            SessionTicks::from_event_path(&path, &params.grid, first_date + Days::new(d as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    TickDataset::new(params.grid.clone(), sessions, "synthetic")
}
