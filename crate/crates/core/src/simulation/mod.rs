//! Joint path generators for all products of a session.
//!
//! Two exact jump generators that are equal in law ([`simulate_thinning`] and
//! [`simulate_decomposition`]), the diffusion limit ([`simulate_diffusion`]), grid sampling and
//! reproducible parallel batches.

mod batch;
mod cpp;
mod decomposition;
mod diffusion;
pub mod io;
mod path;
mod stats;
mod thinning;

pub use batch::{simulate_batch, BatchStream, Generator, GeneratorKind, SimConfig};
pub use cpp::{sample_inhomogeneous_cpp, JumpSampler, RateSpec};
pub use decomposition::{common_layer, simulate_decomposition};
pub use diffusion::{simulate_diffusion, CorrelationFactor, DiffusionModel};
pub use path::{sample_onto_grid, Event, EventPath, EventSink, GridAccumulator, GridPath, Origin};
pub use stats::Moments;
pub use thinning::simulate_thinning;

use crate::error::{Error, Result};
use crate::model::ModelParams;

pub(crate) fn check_f0(params: &ModelParams, f0: &[f64]) -> Result<()> {
    if f0.len() != params.n_products() {
        return Err(Error::InvalidArgument(format!(
            "{} initial prices for {} products",
            f0.len(),
            params.n_products()
        )));
    }
    if f0.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidArgument("initial prices must be finite".into()));
    }
    Ok(())
}
