use rand::Rng;

use super::cpp::{poisson_count, sample_cpp_into, JumpSampler, RateSpec};
use super::path::{EventPath, EventSink, Origin};
use crate::error::Result;
use crate::model::ModelParams;
use crate::rng::child_rng;

/// Draws one session by thinning the common measures and adds per-product idiosyncratic
/// compound Poisson jumps. Product `m` receives events on `[0, min(until, T_m - lead)]`.
pub(crate) fn thinning_into<R: Rng + ?Sized, S: EventSink>(
    params: &ModelParams,
    sampler: &JumpSampler,
    lead: f64,
    until: f64,
    rng: &mut R,
    sink: &mut S,
    scratch: &mut Vec<(f64, f64)>,
) {
    let mats = params.grid.maturities();
    let kappa = params.kappa;

    // Idiosyncratic part: both signs merged into one process of rate 2μ e^{-κ(T_m - s)}.
    if params.mu > 0.0 {
        for (m, &t_m) in mats.iter().enumerate() {
            let spec = RateSpec {
                scale: 2.0 * params.mu,
                kappa,
                anchor: t_m,
                start: 0.0,
                end: until.min(t_m - lead),
            };
            sample_cpp_into(&spec, sampler, rng, scratch);
            for &(t, size) in scratch.iter() {
                let signed = if rng.random::<bool>() { size } else { -size };
                sink.record(m, t, signed, Origin::Idiosyncratic);
            }
        }
    }

    // Common part: candidates uniform on [0, t_max] × (0, μ_c], two signs merged.
    if params.mu_c > 0.0 {
        let t_max = until.min(params.grid.horizon() - lead);
        if t_max <= 0.0 {
            return;
        }
        let n = poisson_count(rng, 2.0 * params.mu_c * t_max);
        for id in 0..n {
            let t = rng.random::<f64>() * t_max;
            let v = rng.random::<f64>();
            // x = μ_c (1 - v) ≤ μ_c e^{-κ(T_m - t)}  ⟺  T_m ≤ t - ln(1 - v)/κ
            let reach = if kappa > 0.0 {
                t - (-v).ln_1p() / kappa
            } else {
                f64::INFINITY
            };
            let first = mats.partition_point(|&tm| tm - lead < t);
            let last = mats.partition_point(|&tm| tm <= reach);
            if last <= first {
                continue;
            }
            let size = sampler.sample(rng);
            let signed = if rng.random::<bool>() { size } else { -size };
            for m in first..last {
                sink.record(m, t, signed, Origin::Common(id));
            }
        }
    }
}

/// One session path drawn by thinning the common-shock Poisson measures.
///
/// Events run up to each product's maturity; draws come from stream 0 of `seed`.
pub fn simulate_thinning(params: &ModelParams, f0: &[f64], seed: u64) -> Result<EventPath> {
    params.validate()?;
    super::check_f0(params, f0)?;
    let sampler = JumpSampler::new(&params.jump_law);
    let mut path = EventPath::new(f0.to_vec());
    let mut scratch = Vec::new();
    thinning_into(
        params,
        &sampler,
        0.0,
        params.grid.horizon(),
        &mut child_rng(seed, 0),
        &mut path,
        &mut scratch,
    );
    Ok(path.finish())
}
