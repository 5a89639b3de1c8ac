use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Energy storage with a single charge/discharge rate.
///
/// Stock moves on the grid `{0, C̲, 2C̲, …, C̄}`; a level is an index on that grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatterySpec<T = f64> {
    /// `C̄`, MWh.
    #[serde(rename = "capacity_mwh")]
    pub capacity: T,
    /// `C̲`, MWh per hour.
    #[serde(rename = "power_mw")]
    pub power: T,
    /// `ρ`
    pub efficiency: T,
    /// MWh.
    #[serde(rename = "initial_stock_mwh", default)]
    pub initial_stock: T,
}

impl<T: Scalar> BatterySpec<T> {
    pub fn new(capacity: T, power: T, efficiency: T) -> Result<Self> {
        let spec = Self {
            capacity,
            power,
            efficiency,
            initial_stock: T::zero(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `n` MWh of capacity at 1 MW and `ρ = 0.92`.
    pub fn hours(n: u32) -> Self {
        Self::new(T::lit(n as f64), T::one(), T::lit(0.92)).expect("valid battery")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.efficiency > T::zero() && self.efficiency <= T::one()) {
            return bad(format!("efficiency {} must lie in (0, 1]", self.efficiency));
        }
        if !(self.power > T::zero() && self.power.is_finite()) {
            return bad(format!("power {} must be positive", self.power));
        }
        if !(self.capacity >= T::zero() && self.capacity.is_finite()) {
            return bad(format!("capacity {} must be nonnegative", self.capacity));
        }
        let steps = self.capacity / self.power;
        if (steps - steps.round()).abs() > T::lit(1e-6) {
            return bad(format!("power {} does not divide capacity {}", self.power, self.capacity));
        }
        let s0 = self.initial_stock / self.power;
        if (s0 - s0.round()).abs() > T::lit(1e-6) || self.initial_stock < T::zero() || self.initial_stock > self.capacity {
            return bad(format!("initial stock {} is not a level of the stock grid", self.initial_stock));
        }
        Ok(())
    }

    /// Number of stock levels, `C̄/C̲ + 1`.
    pub fn n_levels(&self) -> usize {
        (self.capacity / self.power).round().to_usize().unwrap_or(0) + 1
    }

    pub fn initial_level(&self) -> usize {
        (self.initial_stock / self.power).round().to_usize().unwrap_or(0)
    }

    /// MWh held at `level`.
    pub fn stock(&self, level: usize) -> T {
        self.power * T::lit(level as f64)
    }

    pub fn cast<U: Scalar>(&self) -> BatterySpec<U> {
        BatterySpec {
            capacity: U::lit(self.capacity.as_f64()),
            power: U::lit(self.power.as_f64()),
            efficiency: U::lit(self.efficiency.as_f64()),
            initial_stock: U::lit(self.initial_stock.as_f64()),
        }
    }
}

/// Control steps in tie-break order: hold, withdraw, inject.
pub const CONTROL_ORDER: [i8; 3] = [0, -1, 1];

/// Admissible level steps from `level` in tie-break order.
#[inline]
pub fn admissible_steps(n_levels: usize, level: usize) -> impl Iterator<Item = i8> {
    CONTROL_ORDER.into_iter().filter(move |&c| match c {
        -1 => level > 0,
        1 => level + 1 < n_levels,
        _ => true,
    })
}

/// Admissible controls in MWh (`-C̲`, `0`, `+C̲`) at stock `stock`, in tie-break order.
pub fn admissible_controls<T: Scalar>(spec: &BatterySpec<T>, stock: T) -> Vec<T> {
    let eps = spec.power * T::lit(1e-9);
    CONTROL_ORDER
        .into_iter()
        .filter(|&c| match c {
            -1 => stock - spec.power >= -eps,
            1 => stock + spec.power <= spec.capacity + eps,
            _ => true,
        })
        .map(|c| spec.power * T::lit(c as f64))
        .collect()
}

/// Cash received for control `c` (MWh, positive = injection) at `price`: an injection of
/// `E` buys `E/ρ`, a withdrawal of `E` sells `ρE`.
#[inline]
pub fn cashflow<T: Scalar>(c: T, price: T, efficiency: T) -> T {
    if c > T::zero() {
        -c / efficiency * price
    } else if c < T::zero() {
        -c * efficiency * price
    } else {
        T::zero()
    }
}

/// Picks the best step in tie-break order: a later step must be strictly better.
#[inline]
pub(crate) fn best_step(n_levels: usize, level: usize, mut value: impl FnMut(i8) -> f64) -> (i8, f64) {
    let mut best = (0i8, f64::NEG_INFINITY);
    for c in admissible_steps(n_levels, level) {
        let v = value(c);
        if v > best.1 {
            best = (c, v);
        }
    }
    best
}
