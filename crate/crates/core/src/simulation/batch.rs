use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cpp::JumpSampler;
use super::decomposition::{check_decomposable, decomposition_into};
use super::diffusion::DiffusionModel;
use super::path::{check_grid_times, GridAccumulator, GridPath};
use super::thinning::thinning_into;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::rng::{child_rng, PathRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Thinning,
    Decomposition,
    Diffusion,
}

impl GeneratorKind {
    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::Thinning => "thinning",
            GeneratorKind::Decomposition => "decomposition",
            GeneratorKind::Diffusion => "diffusion",
        }
    }

    pub fn is_jump(self) -> bool {
        self != GeneratorKind::Diffusion
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "thinning" => Ok(GeneratorKind::Thinning),
            "decomposition" => Ok(GeneratorKind::Decomposition),
            "diffusion" => Ok(GeneratorKind::Diffusion),
            other => Err(Error::InvalidArgument(format!("unknown generator '{other}'"))),
        }
    }
}

/// Batch settings. `n_paths = 0` is allowed and yields an empty batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_paths: u64,
    pub master_seed: u64,
    pub generator: GeneratorKind,
}

/// Paths generated per parallel chunk of a [`BatchStream`].
const CHUNK: u64 = 1024;

/// A prepared path generator for fixed parameters, initial prices and output grid.
///
/// Path `i` of master seed `s` depends only on `(s, i)`.
#[derive(Debug, Clone)]
pub struct Generator {
    params: ModelParams,
    f0: Vec<f64>,
    grid_times: Vec<f64>,
    kind: GeneratorKind,
    sampler: JumpSampler,
    diffusion: Option<DiffusionModel>,
    lead: f64,
    until: f64,
}

impl Generator {
    pub fn new(params: &ModelParams, f0: &[f64], grid_times: &[f64], kind: GeneratorKind) -> Result<Self> {
        params.validate()?;
        super::check_f0(params, f0)?;
        check_grid_times(grid_times)?;
        if kind == GeneratorKind::Decomposition {
            check_decomposable(params)?;
        }
        let diffusion = match kind {
            GeneratorKind::Diffusion => Some(DiffusionModel::new(params, grid_times)?),
            _ => None,
        };
        // Events after a product's cutoff or after the last grid time never reach the output.
        let until = grid_times.last().copied().unwrap_or(0.0);
        Ok(Self {
            params: params.clone(),
            f0: f0.to_vec(),
            grid_times: grid_times.to_vec(),
            kind,
            sampler: JumpSampler::new(&params.jump_law),
            diffusion,
            lead: params.grid.cutoff_lead(),
            until,
        })
    }

    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn f0(&self) -> &[f64] {
        &self.f0
    }

    pub fn grid_times(&self) -> &[f64] {
        &self.grid_times
    }

    pub fn path_with(&self, rng: &mut PathRng) -> GridPath {
        if let Some(model) = &self.diffusion {
            return model.sample(&self.f0, rng);
        }
        let mut acc = GridAccumulator::new(&self.params.grid, &self.grid_times);
        let mut scratch = Vec::new();
        match self.kind {
            GeneratorKind::Thinning => {
                thinning_into(&self.params, &self.sampler, self.lead, self.until, rng, &mut acc, &mut scratch)
            }
            _ => decomposition_into(&self.params, &self.sampler, self.lead, self.until, rng, &mut acc, &mut scratch),
        }
        acc.finish(&self.f0)
    }

    /// Path `index` of the batch with `master_seed`.
    pub fn path(&self, master_seed: u64, index: u64) -> GridPath {
        self.path_with(&mut child_rng(master_seed, index))
    }

    /// Paths `range` in index order, generated in parallel.
    pub fn paths(&self, master_seed: u64, range: std::ops::Range<u64>) -> Vec<GridPath> {
        range.into_par_iter().map(|i| self.path(master_seed, i)).collect()
    }

    /// Parallel map over paths `0..n` followed by an in-order sequential fold, so the result
    /// does not depend on the thread count.
    pub fn map_fold<T, A, M, F>(&self, master_seed: u64, n: u64, init: A, map: M, mut fold: F) -> A
    where
        T: Send,
        M: Fn(u64, GridPath) -> T + Sync + Send,
        F: FnMut(A, T) -> A,
    {
        let mut acc = init;
        let mut start = 0;
        while start < n {
            let end = (start + CHUNK).min(n);
            let chunk: Vec<T> = (start..end)
                .into_par_iter()
                .map(|i| map(i, self.path(master_seed, i)))
                .collect();
            for item in chunk {
                acc = fold(acc, item);
            }
            start = end;
        }
        acc
    }

    pub fn stream(self, config: &SimConfig) -> BatchStream {
        BatchStream {
            generator: self,
            master_seed: config.master_seed,
            next: 0,
            end: config.n_paths,
            buffer: VecDeque::new(),
        }
    }
}

/// Ordered stream of grid paths, generated chunk by chunk in parallel.
#[derive(Debug)]
pub struct BatchStream {
    generator: Generator,
    master_seed: u64,
    next: u64,
    end: u64,
    buffer: VecDeque<GridPath>,
}

impl BatchStream {
    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn n_paths(&self) -> u64 {
        self.end
    }
}

impl Iterator for BatchStream {
    type Item = GridPath;

    fn next(&mut self) -> Option<GridPath> {
        if self.buffer.is_empty() && self.next < self.end {
            let stop = (self.next + CHUNK).min(self.end);
            self.buffer = self.generator.paths(self.master_seed, self.next..stop).into();
            self.next = stop;
        }
        self.buffer.pop_front()
    }
}

/// Generates `config.n_paths` paths on `grid_times`, path `i` from stream `i` of the master seed.
pub fn simulate_batch(params: &ModelParams, f0: &[f64], grid_times: &[f64], config: &SimConfig) -> Result<BatchStream> {
    Ok(Generator::new(params, f0, grid_times, config.generator)?.stream(config))
}
