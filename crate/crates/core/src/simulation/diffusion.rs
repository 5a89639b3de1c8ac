use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::path::{check_grid_times, GridPath};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::rng::child_rng;
use crate::scalar::exp_integral;

const MAX_JITTER: f64 = 1e-10;

/// Lower Cholesky factor of the Brownian correlation matrix
/// `R_kl = (μ δ_kl + μ_c)/(μ + μ_c) · e^{-κ|T_k - T_l|/2}`.
#[derive(Debug, Clone)]
pub struct CorrelationFactor {
    n: usize,
    /// Row-major packed lower triangle.
    lower: Vec<f64>,
    jitter: f64,
}

impl CorrelationFactor {
    pub fn correlation_matrix(params: &ModelParams) -> DMatrix<f64> {
        let mats = params.grid.maturities();
        let n = mats.len();
        let total = params.total_intensity();
        DMatrix::from_fn(n, n, |k, l| {
            let weight = if k == l { params.mu + params.mu_c } else { params.mu_c };
            weight / total * (-params.kappa * (mats[k] - mats[l]).abs() / 2.0).exp()
        })
    }

    pub fn new(params: &ModelParams) -> Result<Self> {
        Self::from_matrix(&Self::correlation_matrix(params))
    }

    /// Factorizes a symmetric matrix, adding a ridge of at most `1e-10` if needed.
    pub fn from_matrix(r: &DMatrix<f64>) -> Result<Self> {
        let n = r.nrows();
        if r.ncols() != n {
            return Err(Error::InvalidArgument("correlation matrix must be square".into()));
        }
        for jitter in [0.0, 1e-14, 1e-12, MAX_JITTER] {
            let shifted = r + DMatrix::identity(n, n) * jitter;
            if let Some(chol) = shifted.cholesky() {
                let l = chol.l();
                let mut lower = Vec::with_capacity(n * (n + 1) / 2);
                for i in 0..n {
                    for j in 0..=i {
                        lower.push(l[(i, j)]);
                    }
                }
                return Ok(Self { n, lower, jitter });
            }
        }
        let eig = SymmetricEigen::new(r.clone());
        let (idx, min) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((0, f64::NAN));
        Err(Error::Numerical(format!(
            "correlation matrix is not positive semidefinite: eigenvalue #{idx} = {min:e} below -{MAX_JITTER:e}"
        )))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Ridge that was added to the diagonal before factorization.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `out = L z`
    #[inline]
    pub fn apply(&self, z: &[f64], out: &mut [f64]) {
        let mut k = 0;
        for i in 0..self.n {
            let mut acc = 0.0;
            for zj in &z[..=i] {
                acc += self.lower[k] * zj;
                k += 1;
            }
            out[i] = acc;
        }
    }
}

#[derive(Debug, Clone)]
struct Step {
    /// Per-product standard deviation of the increment over the step (0 once untradable).
    vol: Vec<f64>,
    /// Output grid index reached at the end of the step, if any.
    output: Option<usize>,
}

/// Diffusion limit of the model sampled with exact Gaussian increments on a fixed time grid.
///
/// `df_m = sqrt(2 m2 (μ + μ_c)) e^{-κ(T_m - s)/2} 1_{s ≤ T_m - lead} dW_m`; the grid is refined
/// at every trading cutoff so increments stop exactly there.
#[derive(Debug, Clone)]
pub struct DiffusionModel {
    factor: CorrelationFactor,
    grid_times: Vec<f64>,
    steps: Vec<Step>,
    /// Grid points at `t = 0` are reported before any step.
    leading_zeros: usize,
}

impl DiffusionModel {
    pub fn new(params: &ModelParams, grid_times: &[f64]) -> Result<Self> {
        params.validate()?;
        check_grid_times(grid_times)?;
        let factor = CorrelationFactor::new(params)?;
        let n = params.n_products();
        let cutoffs: Vec<f64> = (0..n).map(|m| params.grid.cutoff(m)).collect();
        let end = grid_times.last().copied().unwrap_or(0.0);

        let mut points: Vec<(f64, Option<usize>)> = grid_times
            .iter()
            .enumerate()
            .map(|(k, &t)| (t, Some(k)))
            .collect();
        points.extend(cutoffs.iter().filter(|&&c| c > 0.0 && c < end).map(|&c| (c, None)));
        points.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.is_some().cmp(&a.1.is_some())));
        points.dedup_by(|later, earlier| later.0 == earlier.0);

        let leading_zeros = usize::from(grid_times.first() == Some(&0.0));
        let scale = (2.0 * params.jump_law.m2() * params.total_intensity()).sqrt();
        let mut steps = Vec::new();
        let mut a = 0.0;
        for &(b, output) in &points {
            if b == 0.0 {
                continue;
            }
            let vol = (0..n)
                .map(|m| {
                    if b <= cutoffs[m] {
                        let t_m = params.grid.maturity(m);
                        scale * (-params.kappa * (t_m - b) / 2.0).exp() * exp_integral(params.kappa, b, a, b).sqrt()
                    } else {
                        0.0
                    }
                })
                .collect();
            steps.push(Step { vol, output });
            a = b;
        }
        Ok(Self {
            factor,
            grid_times: grid_times.to_vec(),
            steps,
            leading_zeros,
        })
    }

    pub fn n_products(&self) -> usize {
        self.factor.dim()
    }

    pub fn grid_times(&self) -> &[f64] {
        &self.grid_times
    }

    pub fn factor(&self) -> &CorrelationFactor {
        &self.factor
    }

    /// Writes one path, product-major, into `out` (length `M × |grid|`).
    pub fn sample_into<R: Rng + ?Sized>(&self, f0: &[f64], rng: &mut R, out: &mut [f64]) {
        let n = self.n_products();
        let g = self.grid_times.len();
        let mut level = f0.to_vec();
        let mut z = vec![0.0; n];
        let mut x = vec![0.0; n];
        for k in 0..self.leading_zeros {
            for m in 0..n {
                out[m * g + k] = level[m];
            }
        }
        for step in &self.steps {
            for zi in z.iter_mut() {
                *zi = StandardNormal.sample(rng);
            }
            self.factor.apply(&z, &mut x);
            for m in 0..n {
                level[m] += step.vol[m] * x[m];
            }
            if let Some(k) = step.output {
                for m in 0..n {
                    out[m * g + k] = level[m];
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, f0: &[f64], rng: &mut R) -> GridPath {
        let mut prices = vec![0.0; self.n_products() * self.grid_times.len()];
        self.sample_into(f0, rng, &mut prices);
        GridPath::from_prices(self.grid_times.clone(), self.n_products(), prices).expect("sized buffer")
    }
}

/// One diffusion-limit path on `grid_times` (stream 0 of `seed`).
pub fn simulate_diffusion(params: &ModelParams, f0: &[f64], grid_times: &[f64], seed: u64) -> Result<GridPath> {
    super::check_f0(params, f0)?;
    let model = DiffusionModel::new(params, grid_times)?;
    Ok(model.sample(f0, &mut child_rng(seed, 0)))
}
