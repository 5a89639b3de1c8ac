use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Price tick of the intraday market, EUR/MWh.
pub const TICK_SIZE: f64 = 0.01;

/// Session clock offset of the first delivery hour: the session opens at 15:00 on D-1,
/// delivery hour 1 of day D starts nine hours later.
pub const FIRST_DELIVERY_HOUR: f64 = 9.0;

/// Ordered maturities `T_1 < … < T_M` on the session clock (hours since 15:00 on D-1).
///
/// Product `m` (0-based in this API) trades on `[0, T_m - cutoff_lead]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaturityGrid<T = f64> {
    maturities: Vec<T>,
    cutoff_lead: T,
}

impl<T: Scalar> MaturityGrid<T> {
    pub fn new(maturities: Vec<T>, cutoff_lead: T) -> Result<Self> {
        if maturities.is_empty() {
            return Err(Error::InvalidParameter("maturity grid is empty".into()));
        }
        if maturities.iter().any(|t| !(*t > T::zero()) || !t.is_finite()) {
            return Err(Error::InvalidParameter("maturities must be positive and finite".into()));
        }
        if maturities.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("maturities must be strictly increasing".into()));
        }
        if !(cutoff_lead >= T::zero()) || cutoff_lead >= maturities[0] {
            return Err(Error::InvalidParameter(format!(
                "cutoff lead {cutoff_lead} must lie in [0, T_1 = {})",
                maturities[0]
            )));
        }
        Ok(Self {
            maturities,
            cutoff_lead,
        })
    }

    /// `count` hourly products `T_m = 9 + (m - 1)` with the one-hour cutoff.
    pub fn hourly(count: usize) -> Self {
        let maturities = (0..count)
            .map(|m| T::lit(FIRST_DELIVERY_HOUR + m as f64))
            .collect();
        Self::new(maturities, T::one()).expect("hourly grid is valid")
    }

    /// The canonical 24-product delivery day.
    pub fn daily() -> Self {
        Self::hourly(24)
    }

    pub fn len(&self) -> usize {
        self.maturities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maturities.is_empty()
    }

    pub fn maturities(&self) -> &[T] {
        &self.maturities
    }

    pub fn maturity(&self, m: usize) -> T {
        self.maturities[m]
    }

    pub fn cutoff_lead(&self) -> T {
        self.cutoff_lead
    }

    /// Last tradable instant `T_m - lead` of product `m`.
    pub fn cutoff(&self, m: usize) -> T {
        self.maturities[m] - self.cutoff_lead
    }

    pub fn horizon(&self) -> T {
        *self.maturities.last().expect("nonempty")
    }

    pub fn check_index(&self, m: usize) -> Result<()> {
        if m < self.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: m,
                len: self.len(),
            })
        }
    }

    pub fn cast<U: Scalar>(&self) -> MaturityGrid<U> {
        MaturityGrid {
            maturities: self.maturities.iter().map(|t| U::lit(t.as_f64())).collect(),
            cutoff_lead: U::lit(self.cutoff_lead.as_f64()),
        }
    }
}

/// Discrete law of absolute jump sizes on the tick grid.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpLaw<T = f64> {
    ticks: Vec<u32>,
    probs: Vec<T>,
    m1: T,
    m2: T,
}

impl<T: Scalar> JumpLaw<T> {
    /// Atoms given as tick multiples (`size = ticks * 0.01` EUR/MWh).
    pub fn from_ticks(ticks: Vec<u32>, probs: Vec<T>) -> Result<Self> {
        if ticks.is_empty() || ticks.len() != probs.len() {
            return Err(Error::InvalidParameter(
                "jump law needs matching, nonempty size and probability lists".into(),
            ));
        }
        if ticks.iter().any(|&k| k == 0) {
            return Err(Error::InvalidParameter("jump sizes must be at least one tick".into()));
        }
        if probs.iter().any(|p| !(*p > T::zero() && *p <= T::one())) {
            return Err(Error::InvalidParameter("jump probabilities must lie in (0, 1]".into()));
        }
        let total: T = probs.iter().copied().sum();
        let tol = if T::epsilon() > T::lit(1e-10) { T::lit(1e-6) } else { T::lit(1e-12) };
        if (total - T::one()).abs() > tol {
            return Err(Error::InvalidParameter(format!(
                "jump probabilities sum to {total}, not 1"
            )));
        }
        let tick = T::lit(TICK_SIZE);
        let mut m1 = T::zero();
        let mut m2 = T::zero();
        for (&k, &p) in ticks.iter().zip(&probs) {
            let y = T::lit(k as f64) * tick;
            m1 = m1 + p * y;
            m2 = m2 + p * y * y;
        }
        Ok(Self {
            ticks,
            probs,
            m1,
            m2,
        })
    }

    /// Atoms given in EUR/MWh; each size must sit on the 0.01 grid.
    pub fn from_sizes(sizes: &[T], probs: Vec<T>) -> Result<Self> {
        let mut ticks = Vec::with_capacity(sizes.len());
        for &s in sizes {
            let k = (s.as_f64() / TICK_SIZE).round();
            if !(k >= 1.0) || (s.as_f64() - k * TICK_SIZE).abs() > 1e-6 {
                return Err(Error::InvalidParameter(format!(
                    "jump size {s} is not a positive multiple of the {TICK_SIZE} tick"
                )));
            }
            ticks.push(k as u32);
        }
        Self::from_ticks(ticks, probs)
    }

    /// Law with a single atom.
    pub fn single(ticks: u32) -> Self {
        Self::from_ticks(vec![ticks], vec![T::one()]).expect("single atom law")
    }

    pub fn ticks(&self) -> &[u32] {
        &self.ticks
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn sizes(&self) -> Vec<T> {
        self.ticks
            .iter()
            .map(|&k| T::lit(k as f64 * TICK_SIZE))
            .collect()
    }

    /// `∫ y ν(dy)`
    pub fn m1(&self) -> T {
        self.m1
    }

    /// `∫ y² ν(dy)`
    pub fn m2(&self) -> T {
        self.m2
    }

    /// Total variation distance `½ Σ |p - q|` over the union of supports.
    pub fn total_variation(&self, other: &JumpLaw<T>) -> T {
        let mut a: Vec<(u32, T)> = self.ticks.iter().copied().zip(self.probs.iter().copied()).collect();
        let mut b: Vec<(u32, T)> = other.ticks.iter().copied().zip(other.probs.iter().copied()).collect();
        a.sort_by_key(|x| x.0);
        b.sort_by_key(|x| x.0);
        let (mut i, mut j) = (0, 0);
        let mut acc = T::zero();
        while i < a.len() || j < b.len() {
            match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) if x.0 == y.0 => {
                    acc = acc + (x.1 - y.1).abs();
                    i += 1;
                    j += 1;
                }
                (Some(x), Some(y)) if x.0 < y.0 => {
                    acc = acc + x.1;
                    i += 1;
                }
                (Some(_), Some(y)) => {
                    acc = acc + y.1;
                    j += 1;
                }
                (Some(x), None) => {
                    acc = acc + x.1;
                    i += 1;
                }
                (None, Some(y)) => {
                    acc = acc + y.1;
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        acc / T::lit(2.0)
    }

    pub fn cast<U: Scalar>(&self) -> JumpLaw<U> {
        JumpLaw::from_ticks(
            self.ticks.clone(),
            self.probs.iter().map(|p| U::lit(p.as_f64())).collect(),
        )
        .expect("cast of a valid law")
    }
}

/// `(κ, μ, μ_c)` plus the maturity grid and jump law.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T = f64> {
    /// Samuelson rate, 1/hour.
    pub kappa: T,
    /// Idiosyncratic intensity scale, 1/hour.
    pub mu: T,
    /// Common-shock intensity scale, 1/hour.
    pub mu_c: T,
    pub grid: MaturityGrid<T>,
    pub jump_law: JumpLaw<T>,
}

impl<T: Scalar> ModelParams<T> {
    pub fn new(kappa: T, mu: T, mu_c: T, grid: MaturityGrid<T>, jump_law: JumpLaw<T>) -> Result<Self> {
        let params = Self {
            kappa,
            mu,
            mu_c,
            grid,
            jump_law,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("kappa", self.kappa), ("mu", self.mu), ("mu_c", self.mu_c)] {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        if !(self.mu + self.mu_c > T::zero()) {
            return Err(Error::InvalidParameter("mu + mu_c must be positive".into()));
        }
        Ok(())
    }

    pub fn n_products(&self) -> usize {
        self.grid.len()
    }

    /// `μ + μ_c`
    pub fn total_intensity(&self) -> T {
        self.mu + self.mu_c
    }

    /// `μ_c / (μ + μ_c)`
    pub fn common_ratio(&self) -> T {
        self.mu_c / (self.mu + self.mu_c)
    }

    /// Same parameters with `μ` and `μ_c` multiplied by `n`.
    pub fn scaled_intensity(&self, n: T) -> Self {
        Self {
            mu: self.mu * n,
            mu_c: self.mu_c * n,
            ..self.clone()
        }
    }

    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        ModelParams {
            kappa: U::lit(self.kappa.as_f64()),
            mu: U::lit(self.mu.as_f64()),
            mu_c: U::lit(self.mu_c.as_f64()),
            grid: self.grid.cast(),
            jump_law: self.jump_law.cast(),
        }
    }
}

/// Initial prices `f_{m,0}`, one per maturity (EUR/MWh).
#[derive(Debug, Clone, PartialEq)]
pub struct InitialPrices<T = f64>(Vec<T>);

impl<T: Scalar> InitialPrices<T> {
    pub fn new(prices: Vec<T>, grid: &MaturityGrid<T>) -> Result<Self> {
        if prices.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "{} initial prices for {} maturities",
                prices.len(),
                grid.len()
            )));
        }
        if prices.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter("initial prices must be finite".into()));
        }
        Ok(Self(prices))
    }

    pub fn flat(price: T, grid: &MaturityGrid<T>) -> Self {
        Self(vec![price; grid.len()])
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }
}

impl<T> std::ops::Deref for InitialPrices<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

/// Canonical parameter sets: the German 2022 and French 2019 calibrations.
pub mod fixtures {
    use super::*;

    /// Three-atom law with `m1 = 1.31`, `m2 = 1.72`.
    pub fn germany_2022_jump_law() -> JumpLaw {
        JumpLaw::from_ticks(vec![121, 131, 141], vec![0.195, 0.61, 0.195]).expect("valid law")
    }

    /// `κ = 0.50`, `μ = 71.96`, `μ_c = 65.68` on the 24-hour grid.
    pub fn germany_2022() -> ModelParams {
        ModelParams::new(0.50, 71.96, 65.68, MaturityGrid::daily(), germany_2022_jump_law())
            .expect("valid params")
    }

    /// `κ = 0.36`, `μ = 7.12`, `μ_c = 2.57` with a single 0.79 atom (closest feasible law to
    /// the published first moment).
    pub fn france_2019() -> ModelParams {
        ModelParams::new(0.36, 7.12, 2.57, MaturityGrid::daily(), JumpLaw::single(79))
            .expect("valid params")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_invariants() {
        assert!(MaturityGrid::new(vec![1.0, 1.0], 0.5).is_err());
        assert!(MaturityGrid::new(vec![2.0, 1.0], 0.5).is_err());
        assert!(MaturityGrid::<f64>::new(vec![], 0.5).is_err());
        assert!(MaturityGrid::new(vec![1.0, 2.0], 1.0).is_err());
        assert!(MaturityGrid::new(vec![-1.0, 2.0], 0.0).is_err());
        let g = MaturityGrid::<f64>::daily();
        assert_eq!(g.len(), 24);
        assert_eq!(g.maturity(0), 9.0);
        assert_eq!(g.maturity(23), 32.0);
        assert_eq!(g.cutoff(4), 12.0);
        assert!(g.check_index(24).is_err());
    }

    #[test]
    fn jump_law_moments() {
        let law = fixtures::germany_2022_jump_law();
        assert!((law.m1() - 1.31).abs() < 1e-12);
        assert!((law.m2() - 1.72).abs() < 1e-12);
        let single = JumpLaw::<f64>::single(1);
        assert_eq!(single.m1(), 0.01);
        assert!((single.m2() - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn jump_law_rejects_bad_input() {
        assert!(JumpLaw::from_ticks(vec![0], vec![1.0]).is_err());
        assert!(JumpLaw::from_ticks(vec![1, 2], vec![0.5, 0.4]).is_err());
        assert!(JumpLaw::from_ticks(vec![1], vec![0.5, 0.5]).is_err());
        assert!(JumpLaw::from_sizes(&[0.015], vec![1.0]).is_err());
        let law = JumpLaw::from_sizes(&[0.01, 0.03], vec![0.25, 0.75]).unwrap();
        assert_eq!(law.ticks(), &[1, 3]);
    }

    #[test]
    fn total_variation_distance() {
        let a = JumpLaw::from_ticks(vec![1, 2], vec![0.5_f64, 0.5]).unwrap();
        let b = JumpLaw::from_ticks(vec![2, 3], vec![0.5_f64, 0.5]).unwrap();
        assert!((a.total_variation(&b) - 0.5_f64).abs() < 1e-15);
        assert_eq!(a.total_variation(&a), 0.0);
    }

    #[test]
    fn params_validation() {
        let g = MaturityGrid::daily();
        let law = JumpLaw::single(1);
        assert!(ModelParams::new(0.5, 0.0, 0.0, g.clone(), law.clone()).is_err());
        assert!(ModelParams::new(-0.1, 1.0, 0.0, g.clone(), law.clone()).is_err());
        assert!(ModelParams::new(0.0, 0.0, 1.0, g, law).is_ok());
    }

    #[test]
    fn f32_params() {
        let p: ModelParams<f32> = fixtures::germany_2022().cast();
        assert!((p.jump_law.m2() - 1.72).abs() < 1e-5);
        assert_eq!(p.grid.len(), 24);
    }
}
