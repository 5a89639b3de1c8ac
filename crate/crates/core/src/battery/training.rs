use super::backtest::PriceSource;
use super::schedule::DecisionSchedule;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::simulation::{Generator, GeneratorKind};

/// Simulated prices read at the decision and feature times of a schedule.
///
/// Holds the features of the schedule's `p`; any smaller `p` reuses the leading columns, so
/// one set serves a whole range of approximation orders.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    schedule: DecisionSchedule,
    generator: GeneratorKind,
    f0: Vec<f64>,
    n_paths: usize,
    /// Step-major: `exec[i * n_paths + k]` is `f_{i, τ_i}` on path `k`.
    exec: Vec<f64>,
    /// Per step, path-major rows of `n_features(i)` prices.
    features: Vec<Vec<f64>>,
}

impl TrainingSet {
    /// Simulates `n_paths` paths from stream `k` of `seed`.
    ///
    /// Paths are drawn from zero initial prices and shifted by `f0` afterwards, so
    /// [`TrainingSet::rebase`] onto other initial prices gives exactly what a fresh
    /// simulation with the same seed would.
    pub fn simulate(
        params: &ModelParams,
        f0: &[f64],
        schedule: &DecisionSchedule,
        kind: GeneratorKind,
        n_paths: usize,
        seed: u64,
    ) -> Result<Self> {
        schedule.validate()?;
        check_products(schedule, f0.len())?;
        if params.n_products() != schedule.n_steps() {
            return Err(Error::InvalidArgument(format!(
                "{} products for a {}-step schedule",
                params.n_products(),
                schedule.n_steps()
            )));
        }
        let times = schedule.observation_times();
        let generator = Generator::new(params, &vec![0.0; f0.len()], &times, kind)?;
        let base = Self::empty(schedule, kind, vec![0.0; f0.len()], n_paths);
        let filled = generator.map_fold(
            seed,
            n_paths as u64,
            (base, 0usize),
            |_, path| read_path(&path, schedule).expect("grid covers every observation time"),
            |(mut set, k), (exec, feats)| {
                set.store(k, &exec, &feats);
                (set, k + 1)
            },
        );
        filled.0.rebase(f0)
    }

    /// Training set read from given paths (any [`PriceSource`]) that started from `f0`.
    pub fn from_paths<S: PriceSource>(
        paths: &[S],
        f0: &[f64],
        schedule: &DecisionSchedule,
        kind: GeneratorKind,
    ) -> Result<Self> {
        schedule.validate()?;
        check_products(schedule, f0.len())?;
        let mut set = Self::empty(schedule, kind, f0.to_vec(), paths.len());
        for (k, p) in paths.iter().enumerate() {
            let (exec, feats) = read_path(p, schedule)?;
            set.store(k, &exec, &feats);
        }
        Ok(set)
    }

    fn empty(schedule: &DecisionSchedule, generator: GeneratorKind, f0: Vec<f64>, n_paths: usize) -> Self {
        let n = schedule.n_steps();
        Self {
            schedule: schedule.clone(),
            generator,
            f0,
            n_paths,
            exec: vec![0.0; n * n_paths],
            features: (0..n).map(|i| vec![0.0; n_paths * schedule.n_features(i)]).collect(),
        }
    }

    fn store(&mut self, k: usize, exec: &[f64], feats: &[f64]) {
        let mut at = 0;
        for (i, &e) in exec.iter().enumerate() {
            self.exec[i * self.n_paths + k] = e;
            let q = self.schedule.n_features(i);
            self.features[i][k * q..(k + 1) * q].copy_from_slice(&feats[at..at + q]);
            at += q;
        }
    }

    /// The same paths shifted onto initial prices `f0`.
    pub fn rebase(&self, f0: &[f64]) -> Result<Self> {
        check_products(&self.schedule, f0.len())?;
        let shift: Vec<f64> = f0.iter().zip(&self.f0).map(|(a, b)| a - b).collect();
        let mut out = self.clone();
        out.f0 = f0.to_vec();
        let n = self.n_paths;
        for i in 0..self.schedule.n_steps() {
            out.exec[i * n..(i + 1) * n].iter_mut().for_each(|v| *v += shift[i]);
            let q = self.schedule.n_features(i);
            if q == 0 {
                continue;
            }
            for row in out.features[i].chunks_mut(q) {
                for (c, v) in row.iter_mut().enumerate() {
                    *v += shift[i + 1 + c];
                }
            }
        }
        Ok(out)
    }

    pub fn schedule(&self) -> &DecisionSchedule {
        &self.schedule
    }

    pub fn generator(&self) -> GeneratorKind {
        self.generator
    }

    pub fn f0(&self) -> &[f64] {
        &self.f0
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    /// Execution prices of step `i` across paths.
    pub fn exec(&self, i: usize) -> &[f64] {
        &self.exec[i * self.n_paths..(i + 1) * self.n_paths]
    }

    /// Feature rows of step `i` and their stride.
    pub fn features(&self, i: usize) -> (&[f64], usize) {
        (&self.features[i], self.schedule.n_features(i))
    }
}

fn check_products(schedule: &DecisionSchedule, n: usize) -> Result<()> {
    if n != schedule.n_steps() {
        return Err(Error::InvalidArgument(format!(
            "{n} initial prices for a {}-step schedule",
            schedule.n_steps()
        )));
    }
    Ok(())
}

/// Execution prices and concatenated feature rows of one path.
fn read_path<S: PriceSource>(path: &S, schedule: &DecisionSchedule) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = schedule.n_steps();
    let missing = |m: usize, t: f64| Error::Data(format!("no price for product {} at t = {t}", m + 1));
    let mut exec = Vec::with_capacity(n);
    let mut feats = Vec::new();
    for i in 0..n {
        let t = schedule.decision_times[i];
        exec.push(path.price(i, t).ok_or_else(|| missing(i, t))?);
        let tf = schedule.feature_times[i];
        for j in i + 1..=i + schedule.n_features(i) {
            feats.push(path.price(j, tf).ok_or_else(|| missing(j, tf))?);
        }
    }
    Ok((exec, feats))
}
