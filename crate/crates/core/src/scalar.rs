//! Scalar abstraction for the analytic layers of the crate.
//!
//! Model formulas, local regressions and the deterministic storage DP are written against
//! [`Scalar`] so they run in `f32` or `f64`. The Monte Carlo and estimation layers are
//! `f64`-only.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::float::TotalOrder;
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type usable by the generic model code.
pub trait Scalar:
    Float + TotalOrder + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl<T> Scalar for T where
    T: Float + TotalOrder + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
}

/// `∫_a^b e^{-κ(anchor - s)} 1_{s ≤ anchor} ds`, in closed form.
///
/// Uses the first-order expansion when `κ (b - a) < 1e-8` so that `κ = 0` is the plain
/// window length.
pub fn exp_integral<T: Scalar>(kappa: T, anchor: T, start: T, end: T) -> T {
    let end = end.min(anchor);
    if end <= start {
        return T::zero();
    }
    let width = end - start;
    let x = kappa * width;
    let tail = (-(kappa * (anchor - end))).exp();
    if x.abs() < T::lit(1e-8) {
        tail * width * (T::one() - x / T::lit(2.0))
    } else {
        tail * (-(-x).exp_m1()) / kappa
    }
}
