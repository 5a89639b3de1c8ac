use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ticks::{SessionTicks, Tick, TickDataset};
use crate::error::{Error, Result};
use crate::model::MaturityGrid;

/// Guards `⌊T/Δ⌋` against representation error (e.g. `1.5 / 0.5`).
const FLOOR_EPS: f64 = 1e-9;

#[inline]
pub(crate) fn grid_index(t: f64, delta: f64) -> usize {
    ((t / delta) + FLOOR_EPS).floor().max(0.0) as usize
}

/// Estimation windows `[T_b,m, T_e,m]`, sampling step `Δ` and minimal pair overlap `δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationWindows {
    pub begin: Vec<f64>,
    pub end: Vec<f64>,
    /// Hours.
    pub delta: f64,
    /// Hours.
    pub min_overlap: f64,
}

impl EstimationWindows {
    /// `T_b = 0`, `T_e = T_m - lead`, `Δ = 30 min`, `δ = 1 h`.
    pub fn standard(grid: &MaturityGrid) -> Self {
        Self {
            begin: vec![0.0; grid.len()],
            end: (0..grid.len()).map(|m| grid.cutoff(m)).collect(),
            delta: 0.5,
            min_overlap: 1.0,
        }
    }

    pub fn validate(&self, grid: &MaturityGrid) -> Result<()> {
        if self.begin.len() != grid.len() || self.end.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "windows given for {} / {} products, grid has {}",
                self.begin.len(),
                self.end.len(),
                grid.len()
            )));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidArgument(format!("sampling step {} must be positive", self.delta)));
        }
        if !(self.min_overlap >= 0.0) {
            return Err(Error::InvalidArgument("minimal overlap must be nonnegative".into()));
        }
        for m in 0..grid.len() {
            let (b, e) = (self.begin[m], self.end[m]);
            if !(b >= 0.0 && b < e && e <= grid.maturity(m)) {
                return Err(Error::InvalidArgument(format!(
                    "window [{b}, {e}] of product {} must satisfy 0 <= T_b < T_e <= T_m",
                    m + 1
                )));
            }
        }
        Ok(())
    }

    /// `[max T_b, min T_e]` of a pair, `None` if shorter than `δ`.
    pub fn overlap(&self, l: usize, m: usize) -> Option<(f64, f64)> {
        let b = self.begin[l].max(self.begin[m]);
        let e = self.end[l].min(self.end[m]);
        (e - b >= self.min_overlap - FLOOR_EPS && e > b).then_some((b, e))
    }
}

/// Last trade at or before `t`; before the first trade, the first trade's price.
pub fn price_locf(ticks: &[Tick], t: f64) -> Option<f64> {
    let first = ticks.first()?;
    let k = ticks.partition_point(|x| x.time <= t);
    Some(if k == 0 { first.price } else { ticks[k - 1].price })
}

/// Prices of one session sampled on `iΔ`, `i = 0..=n`, stored as increments.
#[derive(Debug, Clone)]
pub struct SampledSession {
    delta: f64,
    n: usize,
    /// `increments[m][i-1] = f_{m,iΔ} - f_{m,(i-1)Δ}`; empty products give zeros.
    increments: Vec<Vec<f64>>,
}

impl SampledSession {
    pub fn new(session: &SessionTicks, delta: f64, horizon: f64) -> Self {
        let n = grid_index(horizon, delta);
        let increments = session
            .products
            .iter()
            .map(|ticks| {
                let mut out = vec![0.0; n];
                if let Some(mut prev) = price_locf(ticks, 0.0) {
                    for (i, slot) in out.iter_mut().enumerate() {
                        let cur = price_locf(ticks, (i + 1) as f64 * delta).expect("nonempty");
                        *slot = cur - prev;
                        prev = cur;
                    }
                }
                out
            })
            .collect();
        Self { delta, n, increments }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `Ĉ_kl(Δ, t_end) - Ĉ_kl(Δ, t_begin)` on the zero-anchored grid: the sum over
    /// `i ∈ (⌊t_begin/Δ⌋, ⌊t_end/Δ⌋]`.
    pub fn covariation_between(&self, k: usize, l: usize, t_begin: f64, t_end: f64) -> f64 {
        let lo = grid_index(t_begin, self.delta).min(self.n);
        let hi = grid_index(t_end, self.delta).min(self.n);
        if hi <= lo {
            return 0.0;
        }
        let (a, b) = (&self.increments[k][lo..hi], &self.increments[l][lo..hi]);
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }
}

/// `Σ_{i=1}^{⌊(t_end - t_start)/Δ⌋} (f_{k,t_start+iΔ} - f_{k,t_start+(i-1)Δ})(f_{l,…} - f_{l,…})`
/// with last-tick sampling.
pub fn realized_covariation(
    session: &SessionTicks,
    k: usize,
    l: usize,
    delta: f64,
    t_start: f64,
    t_end: f64,
) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("sampling step {delta} must be positive")));
    }
    if !(t_start >= 0.0 && t_start <= t_end) {
        return Err(Error::InvalidArgument(format!("window [{t_start}, {t_end}] is invalid")));
    }
    for idx in [k, l] {
        if idx >= session.n_products() {
            return Err(Error::IndexOutOfRange {
                index: idx,
                len: session.n_products(),
            });
        }
    }
    let (tk, tl) = (&session.products[k], &session.products[l]);
    if tk.is_empty() || tl.is_empty() {
        return Ok(0.0);
    }
    let n = grid_index(t_end - t_start, delta);
    let mut sum = 0.0;
    let mut pk = price_locf(tk, t_start).expect("nonempty");
    let mut pl = price_locf(tl, t_start).expect("nonempty");
    for i in 1..=n {
        let t = t_start + i as f64 * delta;
        let (ck, cl) = (price_locf(tk, t).expect("nonempty"), price_locf(tl, t).expect("nonempty"));
        sum += (ck - pk) * (cl - pl);
        pk = ck;
        pl = cl;
    }
    Ok(sum)
}

pub(crate) fn sample_all(dataset: &TickDataset, delta: f64) -> Vec<SampledSession> {
    let horizon = dataset.grid.horizon();
    dataset
        .sessions
        .par_iter()
        .map(|s| SampledSession::new(s, delta, horizon))
        .collect()
}

/// Signature plot of product `m`: `(Δ, T⁻¹ · mean_d Ĉ_mm(Δ, T))` with `T = T_m - lead`.
pub fn signature_plot(dataset: &TickDataset, m: usize, deltas: &[f64]) -> Result<Vec<(f64, f64)>> {
    dataset.grid.check_index(m)?;
    if dataset.sessions.is_empty() {
        return Err(Error::Data("no sessions".into()));
    }
    let horizon = dataset.grid.cutoff(m);
    deltas
        .iter()
        .map(|&delta| {
            let total: f64 = dataset
                .sessions
                .iter()
                .map(|s| realized_covariation(s, m, m, delta, 0.0, horizon))
                .sum::<Result<f64>>()?;
            Ok((delta, total / dataset.n_sessions() as f64 / horizon))
        })
        .collect()
}

/// Summed window covariations of a pair across sessions: `(Σ ΔĈ_lm, Σ ΔĈ_ll, Σ ΔĈ_mm)`.
pub(crate) fn pair_sums(sampled: &[SampledSession], l: usize, m: usize, b: f64, e: f64) -> (f64, f64, f64) {
    sampled.iter().fold((0.0, 0.0, 0.0), |acc, s| {
        (
            acc.0 + s.covariation_between(l, m, b, e),
            acc.1 + s.covariation_between(l, l, b, e),
            acc.2 + s.covariation_between(m, m, b, e),
        )
    })
}

pub(crate) fn correlation_from_sums(sums: (f64, f64, f64)) -> Option<f64> {
    let den = (sums.1 * sums.2).sqrt();
    (den > 0.0).then(|| sums.0 / den)
}

/// Realized correlation of products `l`, `m` at step `Δ` on their overlap window, pooled over
/// sessions. `Ok(None)` when a denominator vanishes.
pub fn epps_correlation(
    dataset: &TickDataset,
    windows: &EstimationWindows,
    l: usize,
    m: usize,
    delta: f64,
) -> Result<Option<f64>> {
    dataset.grid.check_index(l)?;
    dataset.grid.check_index(m)?;
    let w = EstimationWindows {
        delta,
        ..windows.clone()
    };
    w.validate(&dataset.grid)?;
    let (b, e) = w.overlap(l, m).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "products {} and {} overlap for less than {} h",
            l + 1,
            m + 1,
            w.min_overlap
        ))
    })?;
    let sampled = sample_all(dataset, delta);
    Ok(correlation_from_sums(pair_sums(&sampled, l, m, b, e)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn session(products: Vec<Vec<(f64, f64)>>) -> SessionTicks {
        SessionTicks {
            delivery_date: NaiveDate::from_ymd_opt(2022, 1, 1).unwrap(),
            products: products
                .into_iter()
                .map(|p| p.into_iter().map(|(time, price)| Tick { time, price }).collect())
                .collect(),
        }
    }

    #[test]
    fn constant_price_has_zero_covariation() {
        let s = session(vec![vec![(0.0, 50.0), (3.0, 50.0)]]);
        assert_eq!(realized_covariation(&s, 0, 0, 0.5, 0.0, 8.0).unwrap(), 0.0);
    }

    #[test]
    fn single_jump_inside_one_cell() {
        let s = session(vec![vec![(0.0, 50.0), (2.2, 52.0)]]);
        assert_eq!(realized_covariation(&s, 0, 0, 0.5, 0.0, 8.0).unwrap(), 4.0);
        let sampled = SampledSession::new(&s, 0.5, 9.0);
        assert_eq!(sampled.covariation_between(0, 0, 0.0, 8.0), 4.0);
        assert_eq!(sampled.covariation_between(0, 0, 2.5, 8.0), 0.0);
        assert_eq!(sampled.covariation_between(0, 0, 2.0, 2.5), 4.0);
    }

    #[test]
    fn first_trade_is_carried_backward() {
        // first trade at 1.3: no fabricated return before it
        let s = session(vec![vec![(1.3, 50.0), (2.7, 49.0)], vec![(0.0, 10.0), (2.6, 11.0)]]);
        assert_eq!(realized_covariation(&s, 0, 0, 0.5, 0.0, 4.0).unwrap(), 1.0);
        assert_eq!(realized_covariation(&s, 0, 1, 0.5, 0.0, 4.0).unwrap(), -1.0);
    }

    #[test]
    fn zero_anchored_difference_matches_direct_sums() {
        // Ĉ(Δ, T_e) - Ĉ(Δ, T_b) on the zero grid
        let s = session(vec![vec![(0.0, 1.0), (0.7, 2.0), (1.6, 4.0), (2.2, 3.0), (3.9, 7.0)]]);
        let sampled = SampledSession::new(&s, 0.5, 9.0);
        let full = realized_covariation(&s, 0, 0, 0.5, 0.0, 3.7).unwrap();
        let head = realized_covariation(&s, 0, 0, 0.5, 0.0, 1.2).unwrap();
        assert!((sampled.covariation_between(0, 0, 1.2, 3.7) - (full - head)).abs() < 1e-12);
    }

    #[test]
    fn windows_and_overlap() {
        let grid = MaturityGrid::hourly(3);
        let w = EstimationWindows::standard(&grid);
        w.validate(&grid).unwrap();
        assert_eq!(w.overlap(0, 2), Some((0.0, 8.0)));
        let narrow = EstimationWindows {
            begin: vec![7.5, 0.0, 0.0],
            ..w.clone()
        };
        assert_eq!(narrow.overlap(0, 1), None);
        let bad = EstimationWindows { delta: 0.0, ..w };
        assert!(bad.validate(&grid).is_err());
    }

    #[test]
    fn epps_diagonal_is_one() {
        let grid = MaturityGrid::hourly(2);
        let s = session(vec![vec![(0.0, 1.0), (3.1, 2.0)], vec![(0.0, 1.0)]]);
        let ds = TickDataset::new(grid.clone(), vec![s], "DE").unwrap();
        let w = EstimationWindows::standard(&grid);
        assert_eq!(epps_correlation(&ds, &w, 0, 0, 0.5).unwrap(), Some(1.0));
        assert_eq!(epps_correlation(&ds, &w, 0, 1, 0.5).unwrap(), None);
    }

    #[test]
    fn empty_delta_list_gives_empty_curve() {
        let grid = MaturityGrid::hourly(1);
        let ds = TickDataset::new(grid, vec![session(vec![vec![(0.0, 1.0)]])], "DE").unwrap();
        assert!(signature_plot(&ds, 0, &[]).unwrap().is_empty());
    }
}
