use rand::Rng;

use super::cpp::{sample_cpp_into, JumpSampler, RateSpec};
use super::path::{EventPath, EventSink, Origin};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::rng::child_rng;

/// Rate specification of common layer `j` (0-based).
///
/// A common shock hits product `m` iff its mark is below `μ_c e^{-κ(T_m - s)}`, a threshold
/// decreasing in `m`. Slicing the mark axis between consecutive thresholds gives layer `j`,
/// of rate `μ_c e^{-κ(T_j - s)} (1 - e^{-κ(T_{j+1} - T_j)})` (plain `μ_c e^{-κ(T_M - s)}` for the
/// last one); its atoms move every tradable product `i ≤ j` by the same jump.
pub fn common_layer(params: &ModelParams, j: usize, until: f64) -> RateSpec {
    let mats = params.grid.maturities();
    let scale = if j + 1 < mats.len() {
        -params.mu_c * (-params.kappa * (mats[j + 1] - mats[j])).exp_m1()
    } else {
        params.mu_c
    };
    RateSpec {
        scale,
        kappa: params.kappa,
        anchor: mats[j],
        start: 0.0,
        end: until,
    }
}

pub(crate) fn check_decomposable(params: &ModelParams) -> Result<()> {
    if params.kappa == 0.0 && params.mu_c > 0.0 {
        return Err(Error::InvalidParameter(
            "decomposition needs kappa > 0 when mu_c > 0 (common layers vanish); use the thinning generator"
                .into(),
        ));
    }
    Ok(())
}

/// One session from `4M` independent compound Poisson processes: per sign, `M`
/// idiosyncratic processes and `M` common layers. Product `m` receives events on
/// `[0, min(until, T_m - lead)]`.
pub(crate) fn decomposition_into<R: Rng + ?Sized, S: EventSink>(
    params: &ModelParams,
    sampler: &JumpSampler,
    lead: f64,
    until: f64,
    rng: &mut R,
    sink: &mut S,
    scratch: &mut Vec<(f64, f64)>,
) {
    let mats = params.grid.maturities();
    let mut next_id = 0u64;
    for sign in [1.0, -1.0] {
        for (m, &t_m) in mats.iter().enumerate() {
            let spec = RateSpec {
                scale: params.mu,
                kappa: params.kappa,
                anchor: t_m,
                start: 0.0,
                end: until.min(t_m - lead),
            };
            sample_cpp_into(&spec, sampler, rng, scratch);
            for &(t, size) in scratch.iter() {
                sink.record(m, t, sign * size, Origin::Idiosyncratic);
            }
        }
        if params.mu_c > 0.0 {
            for j in 0..mats.len() {
                sample_cpp_into(&common_layer(params, j, until.min(mats[j] - lead)), sampler, rng, scratch);
                for &(t, size) in scratch.iter() {
                    let first = mats.partition_point(|&tm| tm - lead < t);
                    for i in first..=j {
                        sink.record(i, t, sign * size, Origin::Common(next_id));
                    }
                    next_id += 1;
                }
            }
        }
    }
}

/// One session path from the compound-Poisson decomposition. Equal in law to
/// [`simulate_thinning`](super::simulate_thinning).
pub fn simulate_decomposition(params: &ModelParams, f0: &[f64], seed: u64) -> Result<EventPath> {
    params.validate()?;
    check_decomposable(params)?;
    super::check_f0(params, f0)?;
    let sampler = JumpSampler::new(&params.jump_law);
    let mut path = EventPath::new(f0.to_vec());
    let mut scratch = Vec::new();
    decomposition_into(
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
