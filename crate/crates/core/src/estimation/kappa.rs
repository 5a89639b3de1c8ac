use super::covariation::EstimationWindows;
use super::ticks::TickDataset;
use crate::error::{Error, Result};
use crate::scalar::exp_integral;

/// Upper end of the κ search, 1/hour.
pub const KAPPA_MAX: f64 = 5.0;
const SCAN_STEP: f64 = 0.05;
const GOLDEN_TOL: f64 = 1e-4;

/// Whether a return is a price change on the tick grid.
#[inline]
pub(crate) fn is_jump(ret: f64, tick: f64) -> bool {
    (ret / tick).round() != 0.0
}

/// Jump times inside each product's window `(T_b, T_e]`, pooled across sessions.
#[derive(Debug, Clone)]
pub struct JumpTimes {
    pub n_sessions: usize,
    pub begin: Vec<f64>,
    pub end: Vec<f64>,
    pub times: Vec<Vec<f64>>,
}

impl JumpTimes {
    /// Every trade with a nonzero return counts once, whatever its size.
    pub fn extract(dataset: &TickDataset, windows: &EstimationWindows) -> Self {
        let times = (0..dataset.n_products())
            .map(|m| {
                let (b, e) = (windows.begin[m], windows.end[m]);
                dataset
                    .sessions
                    .iter()
                    .flat_map(|s| {
                        s.products[m]
                            .windows(2)
                            .filter(move |w| w[1].time > b && w[1].time <= e)
                            .filter(|w| is_jump(w[1].price - w[0].price, dataset.tick_size))
                            .map(|w| w[1].time)
                    })
                    .collect()
            })
            .collect();
        Self {
            n_sessions: dataset.n_sessions(),
            begin: windows.begin.clone(),
            end: windows.end.clone(),
            times,
        }
    }

    pub fn total(&self) -> usize {
        self.times.iter().map(Vec::len).sum()
    }

    /// `Λ̂_m`: jumps per session per hour inside the window.
    pub fn rate(&self, m: usize) -> f64 {
        self.times[m].len() as f64 / (self.n_sessions as f64 * (self.end[m] - self.begin[m]))
    }

    /// `L̂_m(κ)`.
    ///
    /// Every exponential is taken relative to `T_e,m` instead of `T_m`; the factor
    /// `e^{-κ(T_m - T_e,m)}` cancels between the two terms, which keeps large `κ` finite.
    pub fn contrast_m(&self, m: usize, kappa: f64) -> f64 {
        if self.times[m].is_empty() {
            return 0.0;
        }
        let (b, e) = (self.begin[m], self.end[m]);
        let d = self.n_sessions as f64;
        let n_bar = self.times[m].len() as f64 / d;
        let s_bar: f64 = self.times[m].iter().map(|&t| (-kappa * (e - t)).exp()).sum::<f64>() / d;
        let i1 = exp_integral(kappa, e, b, e);
        let i2 = exp_integral(2.0 * kappa, e, b, e);
        -2.0 * n_bar * s_bar / i1 + n_bar * n_bar * i2 / (i1 * i1)
    }

    /// `Σ_m L̂_m(κ)`.
    pub fn contrast(&self, kappa: f64) -> f64 {
        (0..self.times.len()).map(|m| self.contrast_m(m, kappa)).sum()
    }
}

/// Minimizes `f` on `[a, b]` by golden-section search down to an interval of `tol`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    // the bracket ends are candidates too (minimum on the boundary)
    [a, mid, b]
        .into_iter()
        .map(|x| (x, f(x)))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .map(|p| p.0)
        .expect("three candidates")
}

/// `κ̂ = argmin_{κ ∈ [0, 5]} Σ_m L̂_m(κ)`: scan at step 0.05, then golden-section refinement
/// around the best scan point.
pub fn minimize_contrast(jumps: &JumpTimes) -> Result<f64> {
    if jumps.total() == 0 {
        return Err(Error::Data("cannot identify kappa: no jumps inside the estimation windows".into()));
    }
    let n_scan = (KAPPA_MAX / SCAN_STEP).round() as usize;
    let (best, _) = (0..=n_scan)
        .map(|k| {
            let kappa = k as f64 * SCAN_STEP;
            (k, jumps.contrast(kappa))
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty scan");
    let lo = best.saturating_sub(1) as f64 * SCAN_STEP;
    let hi = ((best + 1).min(n_scan)) as f64 * SCAN_STEP;
    Ok(golden_section(|k| jumps.contrast(k), lo, hi, GOLDEN_TOL))
}

/// `κ̂` from cleaned ticks.
pub fn estimate_kappa(dataset: &TickDataset, windows: &EstimationWindows) -> Result<f64> {
    windows.validate(&dataset.grid)?;
    minimize_contrast(&JumpTimes::extract(dataset, windows))
}
