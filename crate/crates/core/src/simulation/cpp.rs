use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Poisson};

use crate::model::JumpLaw;
use crate::model::TICK_SIZE;
use crate::scalar::exp_integral;

/// Alias-table sampler over the atoms of a [`JumpLaw`].
#[derive(Debug, Clone)]
pub struct JumpSampler {
    sizes: Vec<f64>,
    alias: Option<WeightedAliasIndex<f64>>,
}

impl JumpSampler {
    pub fn new(law: &JumpLaw) -> Self {
        let sizes: Vec<f64> = law.ticks().iter().map(|&k| k as f64 * TICK_SIZE).collect();
        let alias = (sizes.len() > 1)
            .then(|| WeightedAliasIndex::new(law.probs().to_vec()).expect("validated probabilities"));
        Self { sizes, alias }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.alias {
            None => self.sizes[0],
            Some(alias) => self.sizes[alias.sample(rng)],
        }
    }
}

/// Poisson count with mean `lambda`; zero for a nonpositive mean.
#[inline]
pub(crate) fn poisson_count<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> u64 {
    if !(lambda > 0.0) {
        return 0;
    }
    Poisson::new(lambda).expect("finite positive mean").sample(rng) as u64
}

/// Exponential rate `scale · e^{-κ(anchor - s)} 1_{s ≤ anchor}` restricted to `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSpec {
    pub scale: f64,
    pub kappa: f64,
    pub anchor: f64,
    pub start: f64,
    pub end: f64,
}

impl RateSpec {
    /// Effective end of the window, after the `s ≤ anchor` indicator.
    pub fn effective_end(&self) -> f64 {
        self.end.min(self.anchor)
    }

    /// Compensator `Λ(t) = ∫_start^t rate(s) ds`.
    pub fn compensator(&self, t: f64) -> f64 {
        if self.scale <= 0.0 {
            return 0.0;
        }
        self.scale * exp_integral(self.kappa, self.anchor, self.start, t.min(self.effective_end()))
    }

    /// Maps `u ∈ [0, 1]` to the time at which the normalized compensator reaches `u`.
    pub fn inverse_fraction(&self, u: f64) -> f64 {
        let width = self.effective_end() - self.start;
        let x = self.kappa * width;
        if x.abs() < 1e-8 {
            self.start + u * width
        } else {
            (self.start + (u * x.exp_m1()).ln_1p() / self.kappa).min(self.effective_end())
        }
    }
}

/// Draws an inhomogeneous compound Poisson process on the window of `spec` by time-change
/// inversion: `N ~ Poisson(Λ(end))`, arrival times `Λ^{-1}(U_i Λ(end))` sorted, unsigned sizes
/// i.i.d. from the jump law.
pub fn sample_inhomogeneous_cpp<R: Rng + ?Sized>(
    spec: &RateSpec,
    sampler: &JumpSampler,
    rng: &mut R,
) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    sample_cpp_into(spec, sampler, rng, &mut out);
    out
}

pub(crate) fn sample_cpp_into<R: Rng + ?Sized>(
    spec: &RateSpec,
    sampler: &JumpSampler,
    rng: &mut R,
    out: &mut Vec<(f64, f64)>,
) {
    out.clear();
    if spec.scale <= 0.0 || spec.effective_end() <= spec.start {
        return;
    }
    let n = poisson_count(rng, spec.compensator(spec.effective_end()));
    out.extend((0..n).map(|_| (spec.inverse_fraction(rng.random::<f64>()), 0.0)));
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    for ev in out.iter_mut() {
        ev.1 = sampler.sample(rng);
    }
}
