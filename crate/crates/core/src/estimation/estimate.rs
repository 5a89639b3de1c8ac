use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::clean::{clean, CleaningReport};
use super::covariation::{correlation_from_sums, grid_index, pair_sums, sample_all, EstimationWindows, SampledSession};
use super::kappa::{is_jump, minimize_contrast, JumpTimes};
use super::ticks::TickDataset;
use crate::error::{Error, Result};
use crate::model::{JumpLaw, MaturityGrid, ModelParams, ModelParamsDoc};
use crate::scalar::exp_integral;

/// Empirical law of absolute returns on the tick grid, pooled over products and sessions.
pub fn fit_jump_law(dataset: &TickDataset) -> Result<JumpLaw> {
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    for s in &dataset.sessions {
        for ticks in &s.products {
            for w in ticks.windows(2) {
                let r = w[1].price - w[0].price;
                if is_jump(r, dataset.tick_size) {
                    let k = (r.abs() / dataset.tick_size).round();
                    *counts.entry(k.min(u32::MAX as f64) as u32).or_default() += 1;
                }
            }
        }
    }
    let total: u64 = counts.values().sum();
    if total == 0 {
        return Err(Error::Data("no price changes to fit the jump law".into()));
    }
    let (ticks, n): (Vec<u32>, Vec<u64>) = counts.into_iter().unzip();
    JumpLaw::from_ticks(ticks, n.into_iter().map(|c| c as f64 / total as f64).collect())
}

/// `∫_{⌊T_b/Δ⌋Δ}^{⌊T_e/Δ⌋Δ} e^{-κ(T_m - s)} ds`
fn floored_integral(grid: &MaturityGrid, windows: &EstimationWindows, m: usize, kappa: f64) -> f64 {
    let d = windows.delta;
    let lo = grid_index(windows.begin[m], d) as f64 * d;
    let hi = grid_index(windows.end[m], d) as f64 * d;
    exp_integral(kappa, grid.maturity(m), lo, hi)
}

/// Closed-form least-squares fit of `μ + μ_c` to the mean window variances.
#[derive(Debug, Clone, PartialEq)]
pub struct MuSumFit {
    pub value: f64,
    /// `mean_d ΔĈ_mm` per product.
    pub mean_variation: Vec<f64>,
    /// Observed minus fitted mean variation per product.
    pub residuals: Vec<f64>,
}

pub(crate) fn mu_sum_from_sampled(
    sampled: &[SampledSession],
    grid: &MaturityGrid,
    windows: &EstimationWindows,
    kappa: f64,
    m2: f64,
) -> Result<MuSumFit> {
    if sampled.is_empty() {
        return Err(Error::Data("no sessions".into()));
    }
    let d = sampled.len() as f64;
    let n = grid.len();
    let mean_variation: Vec<f64> = (0..n)
        .map(|m| {
            sampled
                .iter()
                .map(|s| s.covariation_between(m, m, windows.begin[m], windows.end[m]))
                .sum::<f64>()
                / d
        })
        .collect();
    let j: Vec<f64> = (0..n).map(|m| floored_integral(grid, windows, m, kappa)).collect();
    let num: f64 = mean_variation.iter().zip(&j).map(|(c, j)| c * j).sum();
    let den: f64 = 2.0 * m2 * j.iter().map(|j| j * j).sum::<f64>();
    if !(den > 0.0) {
        return Err(Error::Numerical("mu_S denominator vanishes (empty windows or zero jump law)".into()));
    }
    let mut value = num / den;
    if value < 0.0 {
        log::warn!("negative mu_S numerator ({num:e}); flooring mu_S at 0");
        value = 0.0;
    }
    let residuals = mean_variation
        .iter()
        .zip(&j)
        .map(|(c, j)| c - 2.0 * value * m2 * j)
        .collect();
    Ok(MuSumFit {
        value,
        mean_variation,
        residuals,
    })
}

/// `μ̂_S`, the estimate of `μ + μ_c`.
pub fn estimate_mu_sum(dataset: &TickDataset, windows: &EstimationWindows, kappa: f64, jump_law: &JumpLaw) -> Result<f64> {
    windows.validate(&dataset.grid)?;
    let sampled = sample_all(dataset, windows.delta);
    Ok(mu_sum_from_sampled(&sampled, &dataset.grid, windows, kappa, jump_law.m2())?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCorrelation {
    /// 1-based product numbers, `l < m`.
    pub l: usize,
    pub m: usize,
    /// `|T_l - T_m|`, hours.
    pub gap: f64,
    pub rho: f64,
}

/// Realized correlations of every pair `l < m` whose windows overlap for at least `δ`.
pub(crate) fn pair_correlations(sampled: &[SampledSession], grid: &MaturityGrid, windows: &EstimationWindows) -> Vec<PairCorrelation> {
    let n = grid.len();
    let mut out = Vec::new();
    for l in 0..n {
        for m in l + 1..n {
            let Some((b, e)) = windows.overlap(l, m) else {
                continue;
            };
            if let Some(rho) = correlation_from_sums(pair_sums(sampled, l, m, b, e)) {
                out.push(PairCorrelation {
                    l: l + 1,
                    m: m + 1,
                    gap: (grid.maturity(m) - grid.maturity(l)).abs(),
                    rho,
                });
            }
        }
    }
    out
}

/// `min(Σ ρ̂_lm e^{-κ gap/2} / Σ e^{-κ gap}, 1)`, floored at 0; the diagonal is excluded.
pub(crate) fn mu_ratio_from_pairs(pairs: &[PairCorrelation], kappa: f64) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Data("no product pair overlaps for the minimal window; cannot estimate mu_c/(mu+mu_c)".into()));
    }
    let num: f64 = pairs.iter().map(|p| p.rho * (-kappa * p.gap / 2.0).exp()).sum();
    let den: f64 = pairs.iter().map(|p| (-kappa * p.gap).exp()).sum();
    let ratio = num / den;
    if ratio < 0.0 {
        log::warn!("negative correlation ratio {ratio}; clipping to 0");
    }
    Ok(ratio.clamp(0.0, 1.0))
}

/// `μ̂_R`, the estimate of `μ_c / (μ + μ_c)`.
pub fn estimate_mu_ratio(dataset: &TickDataset, windows: &EstimationWindows, kappa: f64) -> Result<f64> {
    windows.validate(&dataset.grid)?;
    let sampled = sample_all(dataset, windows.delta);
    mu_ratio_from_pairs(&pair_correlations(&sampled, &dataset.grid, windows), kappa)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub n_sessions: usize,
    /// `Λ̂_m`, jumps per session-hour in each window.
    pub jump_rates: Vec<f64>,
    pub kappa_contrast: f64,
    pub mu_sum: f64,
    pub mu_ratio: f64,
    pub mean_variation: Vec<f64>,
    pub variation_residuals: Vec<f64>,
    pub correlations: Vec<PairCorrelation>,
    pub cleaning: CleaningReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedParams {
    pub params: ModelParams,
    pub diagnostics: Diagnostics,
}

#[derive(Serialize, Deserialize)]
struct FittedDoc {
    #[serde(flatten)]
    params: ModelParamsDoc,
    diagnostics: Diagnostics,
}

impl FittedParams {
    /// The model JSON document plus a `diagnostics` block.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&FittedDoc {
            params: (&self.params).into(),
            diagnostics: self.diagnostics.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: FittedDoc = serde_json::from_str(text)?;
        Ok(Self {
            params: doc.params.try_into()?,
            diagnostics: doc.diagnostics,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Full pipeline on raw ticks: clean, jump law, `κ̂`, `μ̂_S`, `μ̂_R`, then
/// `μ̂_c = μ̂_S μ̂_R` and `μ̂ = μ̂_S - μ̂_c`.
pub fn estimate(raw: &TickDataset, windows: &EstimationWindows) -> Result<FittedParams> {
    windows.validate(&raw.grid)?;
    if raw.sessions.is_empty() {
        return Err(Error::Data("no sessions to estimate from".into()));
    }
    let (dataset, cleaning) = clean(raw);
    let jump_law = fit_jump_law(&dataset)?;
    let jumps = JumpTimes::extract(&dataset, windows);
    let kappa = minimize_contrast(&jumps)?;
    let sampled = sample_all(&dataset, windows.delta);
    let mu_sum = mu_sum_from_sampled(&sampled, &dataset.grid, windows, kappa, jump_law.m2())?;
    let correlations = pair_correlations(&sampled, &dataset.grid, windows);
    let mu_ratio = mu_ratio_from_pairs(&correlations, kappa)?;
    let mu_c = mu_sum.value * mu_ratio;
    let mu = mu_sum.value - mu_c;
    let params = ModelParams::new(kappa, mu, mu_c, dataset.grid.clone(), jump_law)
        .map_err(|e| Error::Numerical(format!("estimated parameters are degenerate: {e}")))?;
    Ok(FittedParams {
        params,
        diagnostics: Diagnostics {
            n_sessions: dataset.n_sessions(),
            jump_rates: (0..dataset.n_products()).map(|m| jumps.rate(m)).collect(),
            kappa_contrast: jumps.contrast(kappa),
            mu_sum: mu_sum.value,
            mu_ratio,
            mean_variation: mu_sum.mean_variation,
            variation_residuals: mu_sum.residuals,
            correlations,
            cleaning,
        },
    })
}
