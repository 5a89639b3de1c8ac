//! Closed-form intensities, second moments and common-jump probabilities.
//!
//! All exponential integrals are evaluated analytically via [`exp_integral`]; `κ = 0` is the
//! limit of the same expressions.

use crate::error::{Error, Result};
use crate::model::params::ModelParams;
use crate::scalar::{exp_integral, Scalar};

/// Direction of a jump measure. The model is symmetric, so the closed forms below do not
/// depend on it; it is kept in the signatures to mirror the `π^+` / `π^-` construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JumpSign {
    Up,
    Down,
}

impl<T: Scalar> ModelParams<T> {
    /// Per-sign jump intensity `(μ + μ_c) e^{-κ(T_m - t)} 1_{t ≤ T_m}` of product `m`.
    ///
    /// The total price-change intensity is twice this value.
    pub fn intensity(&self, m: usize, t: T) -> Result<T> {
        self.grid.check_index(m)?;
        let tm = self.grid.maturity(m);
        if t > tm {
            return Ok(T::zero());
        }
        Ok(self.total_intensity() * (-(self.kappa * (tm - t))).exp())
    }

    /// `∫_a^b intensity(m, s) ds`.
    pub fn integrated_intensity(&self, m: usize, start: T, end: T) -> Result<T> {
        self.grid.check_index(m)?;
        Ok(self.total_intensity() * exp_integral(self.kappa, self.grid.maturity(m), start, end))
    }

    /// Expected realized covariation of products `k` and `l` over `[t_start, t_end]`:
    /// `2 m2 (μ δ_kl + μ_c) ∫ e^{-κ(max(T_k,T_l) - s)} 1_{s ≤ min(T_k,T_l)} ds`.
    pub fn expected_covariation(&self, k: usize, l: usize, t_start: T, t_end: T) -> Result<T> {
        self.grid.check_index(k)?;
        self.grid.check_index(l)?;
        if !(t_start >= T::zero()) || t_start > t_end {
            return Err(Error::InvalidArgument(format!(
                "covariation window [{t_start}, {t_end}] must satisfy 0 <= start <= end"
            )));
        }
        let (tk, tl) = (self.grid.maturity(k), self.grid.maturity(l));
        let (near, far) = if tk <= tl { (tk, tl) } else { (tl, tk) };
        let scale = if k == l { self.mu + self.mu_c } else { self.mu_c };
        let shift = (-(self.kappa * (far - near))).exp();
        let two = T::lit(2.0);
        Ok(two * self.jump_law.m2() * scale * shift * exp_integral(self.kappa, near, t_start, t_end))
    }

    /// Model correlation `μ_c/(μ+μ_c) e^{-κ|T_k - T_l|/2}` of two distinct products.
    pub fn model_correlation(&self, k: usize, l: usize) -> Result<T> {
        self.grid.check_index(k)?;
        self.grid.check_index(l)?;
        if k == l {
            return Err(Error::InvalidArgument("model correlation needs k != l".into()));
        }
        let gap = (self.grid.maturity(k) - self.grid.maturity(l)).abs();
        Ok(self.common_ratio() * (-(self.kappa * gap / T::lit(2.0))).exp())
    }

    /// Probability that over `[u, t]` every product of `first` receives at least one common
    /// jump of the given sign while no product of `second` does.
    pub fn common_jump_probability(
        &self,
        first: &[usize],
        second: &[usize],
        u: T,
        t: T,
        _sign: JumpSign,
    ) -> Result<T> {
        if first.is_empty() || second.is_empty() {
            return Err(Error::InvalidArgument("both product sets must be nonempty".into()));
        }
        for &m in first.iter().chain(second) {
            self.grid.check_index(m)?;
        }
        if first.iter().any(|m| second.contains(m)) {
            return Err(Error::InvalidArgument("product sets must be disjoint".into()));
        }
        if u > t {
            return Err(Error::InvalidArgument(format!("u = {u} exceeds t = {t}")));
        }
        if !(u >= T::zero()) {
            return Err(Error::InvalidArgument("u must be nonnegative".into()));
        }
        let earliest = first
            .iter()
            .chain(second)
            .map(|&m| self.grid.maturity(m))
            .fold(T::infinity(), T::min);
        if t > earliest {
            return Err(Error::InvalidArgument(format!(
                "t = {t} is past the earliest maturity {earliest} of the two sets"
            )));
        }
        let last_hit = *first.iter().max().expect("nonempty");
        let first_miss = *second.iter().min().expect("nonempty");
        if last_hit >= first_miss {
            return Ok(T::zero());
        }
        let ta = self.grid.maturity(last_hit);
        let tb = self.grid.maturity(first_miss);
        let reach_a = self.mu_c * exp_integral(self.kappa, ta, u, t);
        let reach_b = self.mu_c * exp_integral(self.kappa, tb, u, t);
        Ok(-(-(reach_a - reach_b)).exp_m1() * (-reach_b).exp())
    }

    /// `σ = sqrt(2(μ+μ_c)/κ · m2)`, EUR/MWh/√hour.
    pub fn volatility_proxy(&self) -> Result<T> {
        if !(self.kappa > T::zero()) {
            return Err(Error::InvalidArgument("volatility proxy needs kappa > 0".into()));
        }
        Ok((T::lit(2.0) * self.total_intensity() / self.kappa * self.jump_law.m2()).sqrt())
    }

    /// Correlation of two hourly products `gap_hours` apart: `ρ e^{-κ(gap-1)/2}` with
    /// `ρ = μ_c/(μ+μ_c) e^{-κ/2}`.
    pub fn correlation_proxy(&self, gap_hours: T) -> Result<T> {
        if !(gap_hours >= T::one()) {
            return Err(Error::InvalidArgument(format!("gap {gap_hours} must be at least one hour")));
        }
        let half = T::lit(0.5);
        let rho = self.common_ratio() * (-(self.kappa * half)).exp();
        Ok(rho * (-(self.kappa * (gap_hours - T::one()) * half)).exp())
    }
}
