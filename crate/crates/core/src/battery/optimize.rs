use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::regression::{LocalLinearFit, MeshSpec};
use super::schedule::DecisionSchedule;
use super::spec::{best_step, cashflow, BatterySpec};
use super::training::TrainingSet;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::simulation::GeneratorKind;

/// Paths per cell below which the regression is considered underfed.
pub const PATHS_PER_CELL: usize = 100;

/// Learned continuation surfaces: one regression per step and reachable post-decision level.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub spec: BatterySpec,
    pub schedule: DecisionSchedule,
    pub generator: GeneratorKind,
    /// `surfaces[i][s]`: continuation after step `i` with stock level `s`, `None` when the
    /// level cannot be reached.
    pub surfaces: Vec<Vec<Option<LocalLinearFit>>>,
}

impl Policy {
    /// `Â_i(s, features)`.
    pub fn continuation(&self, step: usize, level: usize, features: &[f64]) -> Result<f64> {
        self.surfaces
            .get(step)
            .and_then(|row| row.get(level))
            .and_then(Option::as_ref)
            .map(|f| f.predict(features))
            .ok_or_else(|| Error::InvalidArgument(format!("no surface for step {step}, stock level {level}")))
    }

    /// Control step (in units of `C̲`) at step `i` from `level`, given the execution price
    /// and the step's features.
    pub fn decide(&self, step: usize, level: usize, price: f64, features: &[f64]) -> Result<i8> {
        let levels = self.spec.n_levels();
        let mut err = None;
        let (c, _) = best_step(levels, level, |c| {
            let next = (level as isize + c as isize) as usize;
            let flow = cashflow(self.spec.power * c as f64, price, self.spec.efficiency);
            match self.continuation(step, next, features) {
                Ok(v) => flow + v,
                Err(e) => {
                    err = Some(e);
                    f64::NEG_INFINITY
                }
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(c),
        }
    }

    /// Total cells with a constant fit instead of an affine one.
    pub fn fallback_cells(&self) -> usize {
        self.surfaces.iter().flatten().flatten().map(LocalLinearFit::fallbacks).sum()
    }
}

/// Outcome of the backward induction.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimization {
    pub policy: Policy,
    /// Mean realized gain over the training paths, EUR.
    pub value: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub warnings: Vec<String>,
}

/// Summary written next to a policy file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationSummary {
    pub optimisation_value_eur: f64,
    pub std_error_eur: f64,
    pub n_paths: usize,
    pub p: usize,
    pub generator: GeneratorKind,
    pub battery: BatterySpec,
    pub fallback_cells: usize,
    pub warnings: Vec<String>,
}

impl Optimization {
    pub fn summary(&self) -> OptimizationSummary {
        OptimizationSummary {
            optimisation_value_eur: self.value,
            std_error_eur: self.std_error,
            n_paths: self.n_paths,
            p: self.policy.schedule.p,
            generator: self.policy.generator,
            battery: self.policy.spec,
            fallback_cells: self.policy.fallback_cells(),
            warnings: self.warnings.clone(),
        }
    }
}

/// Simulates `n_paths` training paths and runs [`optimize_on`].
pub fn optimize(
    params: &ModelParams,
    f0: &[f64],
    spec: &BatterySpec,
    schedule: &DecisionSchedule,
    kind: GeneratorKind,
    n_paths: usize,
    seed: u64,
) -> Result<Optimization> {
    let training = TrainingSet::simulate(params, f0, schedule, kind, n_paths, seed)?;
    optimize_on(&training, spec, schedule)
}

/// Regression-based backward induction on a training set.
///
/// Going backwards from the last product, the realized gain-to-go `G_{i+1}(s')` of every
/// reachable post-decision level is regressed on the step's features; each path then takes
/// the control maximizing cash flow plus fitted continuation, and `G_i(s)` rolls up the
/// realized gains of that choice. Leftover stock is worth nothing.
pub fn optimize_on(training: &TrainingSet, spec: &BatterySpec, schedule: &DecisionSchedule) -> Result<Optimization> {
    spec.validate()?;
    schedule.validate()?;
    let ts = training.schedule();
    if ts.decision_times != schedule.decision_times || ts.feature_times != schedule.feature_times {
        return Err(Error::InvalidArgument("training set was read on a different schedule".into()));
    }
    if schedule.p > ts.p {
        return Err(Error::InvalidArgument(format!(
            "training set holds {} features, p = {} requested",
            ts.p, schedule.p
        )));
    }
    let n = training.n_paths();
    if n == 0 {
        return Err(Error::InvalidArgument("no training paths".into()));
    }
    let mut warnings = Vec::new();
    let floor = PATHS_PER_CELL * 4usize.pow(schedule.p.min(4) as u32);
    if n < floor {
        let msg = format!("{n} training paths for p = {}: regressions need about {floor}", schedule.p);
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let n_steps = schedule.n_steps();
    let levels = spec.n_levels();
    let s0 = spec.initial_level();
    let reach = |i: usize| s0.saturating_sub(i)..=(s0 + i).min(levels - 1);

    // path-major gain-to-go per level, NaN where unreachable
    let mut gain = vec![0.0f64; n * levels];
    let mut surfaces: Vec<Vec<Option<LocalLinearFit>>> = vec![vec![None; levels]; n_steps];
    for i in (0..n_steps).rev() {
        let q = schedule.n_features(i);
        let (rows, stride) = training.features(i);
        let x: Vec<f64> = if q == stride {
            rows.to_vec()
        } else {
            rows.chunks(stride.max(1)).take(n).flat_map(|r| &r[..q]).copied().collect()
        };
        let mesh = MeshSpec::adaptive(q);
        let post = reach(i + 1);
        let targets: Vec<Vec<f64>> = post
            .clone()
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|s| (0..n).map(|k| gain[k * levels + s]).collect())
            .collect();
        let refs: Vec<&[f64]> = targets.iter().map(Vec::as_slice).collect();
        let fits = LocalLinearFit::fit_many(&x, &refs, &mesh)?;
        for (s, f) in post.clone().zip(fits) {
            surfaces[i][s] = Some(f);
        }
        let row = &surfaces[i];
        let any = row.iter().flatten().next().expect("at least one reachable level");
        let exec = training.exec(i);
        let pre = reach(i);
        let mut next = vec![f64::NAN; n * levels];
        next.par_chunks_mut(levels).enumerate().for_each(|(k, out)| {
            let feat = &x[k * q..(k + 1) * q];
            let cell = any.cell_of(feat);
            let cont: Vec<f64> = (0..levels)
                .map(|s| row[s].as_ref().map_or(f64::NAN, |f| f.predict_in(cell, feat)))
                .collect();
            for s in pre.clone() {
                let flow = |c: i8| cashflow(spec.power * c as f64, exec[k], spec.efficiency);
                let (c, _) = best_step(levels, s, |c| flow(c) + cont[(s as isize + c as isize) as usize]);
                let to = (s as isize + c as isize) as usize;
                out[s] = flow(c) + gain[k * levels + to];
            }
        });
        gain = next;
    }

    let g0: Vec<f64> = (0..n).map(|k| gain[k * levels + s0]).collect();
    let value = g0.iter().sum::<f64>() / n as f64;
    let std_error = if n > 1 {
        let var = g0.iter().map(|g| (g - value).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(Optimization {
        policy: Policy {
            spec: *spec,
            schedule: schedule.clone(),
            generator: training.generator(),
            surfaces,
        },
        value,
        std_error,
        n_paths: n,
        warnings,
    })
}
