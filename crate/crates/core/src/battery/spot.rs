use super::spec::{admissible_steps, cashflow, BatterySpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Optimal deterministic schedule for known prices.
#[derive(Debug, Clone, PartialEq)]
pub struct SpotSolution<T = f64> {
    /// MWh per step, positive = injection.
    pub controls: Vec<T>,
    /// EUR.
    pub value: T,
}

/// Exact dynamic programming over the stock grid for a price vector known in advance.
///
/// Among equally good controls the schedule holds, then withdraws, then injects. Leftover
/// stock is worthless.
pub fn spot_strategy<T: Scalar>(prices: &[T], spec: &BatterySpec<T>) -> Result<SpotSolution<T>> {
    spec.validate()?;
    if prices.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidArgument("spot prices must be finite".into()));
    }
    let n = prices.len();
    let levels = spec.n_levels();
    let mut value = vec![T::zero(); levels];
    let mut choice = vec![0i8; n * levels];
    for i in (0..n).rev() {
        let mut next = vec![T::zero(); levels];
        for (s, slot) in next.iter_mut().enumerate() {
            let mut best: Option<(i8, T)> = None;
            for c in admissible_steps(levels, s) {
                let flow = cashflow(spec.power * T::lit(c as f64), prices[i], spec.efficiency);
                let v = flow + value[(s as isize + c as isize) as usize];
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((c, v));
                }
            }
            let (c, v) = best.expect("holding is always admissible");
            choice[i * levels + s] = c;
            *slot = v;
        }
        value = next;
    }
    let mut s = spec.initial_level();
    let controls = (0..n)
        .map(|i| {
            let c = choice[i * levels + s];
            s = (s as isize + c as isize) as usize;
            spec.power * T::lit(c as f64)
        })
        .collect();
    Ok(SpotSolution {
        controls,
        value: value[spec.initial_level()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Best admissible sequence by enumeration of all `3^n` control vectors.
    fn brute_force(prices: &[f64], spec: &BatterySpec) -> f64 {
        let n = prices.len();
        let mut best = f64::NEG_INFINITY;
        for code in 0..3usize.pow(n as u32) {
            let (mut c, mut stock, mut v, mut ok) = (code, spec.initial_stock, 0.0, true);
            for &p in prices {
                let u = (c % 3) as f64 - 1.0;
                c /= 3;
                stock += u;
                if stock < -1e-9 || stock > spec.capacity + 1e-9 {
                    ok = false;
                    break;
                }
                v += cashflow(u, p, spec.efficiency);
            }
            if ok {
                best = best.max(v);
            }
        }
        best
    }

    #[test]
    fn flat_prices_do_nothing() {
        let spec = BatterySpec::hours(2);
        let sol = spot_strategy(&[50.0; 24], &spec).unwrap();
        assert_eq!(sol.value, 0.0);
        assert!(sol.controls.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn two_step_round_trip() {
        let spec = BatterySpec::hours(1);
        let sol = spot_strategy(&[10.0_f64, 100.0], &spec).unwrap();
        assert!((sol.value - (100.0 * 0.92 - 10.0 / 0.92)).abs() < 1e-12);
        assert!((sol.value - 81.13).abs() < 5e-3);
        assert_eq!(sol.controls, vec![1.0, -1.0]);
        // not worth it when the spread does not cover the losses
        let flat = spot_strategy(&[10.0, 11.0], &spec).unwrap();
        assert_eq!(flat.controls, vec![0.0, 0.0]);
    }

    #[test]
    fn matches_enumeration() {
        let mut rng = crate::rng::child_rng(11, 0);
        for cap in [1u32, 2, 3] {
            let spec = BatterySpec::hours(cap);
            for _ in 0..30 {
                let prices: Vec<f64> = (0..6).map(|_| rng.random::<f64>() * 200.0 - 20.0).collect();
                let sol = spot_strategy(&prices, &spec).unwrap();
                assert!((sol.value - brute_force(&prices, &spec)).abs() < 1e-9);
                let replay: f64 = sol.controls.iter().zip(&prices).map(|(&c, &p)| cashflow(c, p, 0.92)).sum();
                assert!((replay - sol.value).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn single_precision() {
        let spec = BatterySpec::<f32>::hours(1);
        let sol = spot_strategy(&[10.0f32, 100.0], &spec).unwrap();
        assert!((sol.value - 81.130_43).abs() < 1e-3);
    }
}
