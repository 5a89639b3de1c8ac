/// Running first and second moments of a vector-valued sample, mergeable across chunks.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    n: u64,
    sum: Vec<f64>,
    /// Row-major `d × d` sums of products.
    cross: Vec<f64>,
}

impl Moments {
    pub fn new(dim: usize) -> Self {
        Self {
            n: 0,
            sum: vec![0.0; dim],
            cross: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.sum.len()
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn push(&mut self, x: &[f64]) {
        let d = self.dim();
        assert_eq!(x.len(), d, "sample dimension");
        self.n += 1;
        for i in 0..d {
            self.sum[i] += x[i];
            for j in 0..d {
                self.cross[i * d + j] += x[i] * x[j];
            }
        }
    }

    pub fn merge(&mut self, other: &Moments) {
        assert_eq!(self.dim(), other.dim(), "moment dimension");
        self.n += other.n;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.cross.iter_mut().zip(&other.cross) {
            *a += b;
        }
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.sum[i] / self.n as f64
    }

    /// Mean of `x_i x_j` (raw, uncentered).
    pub fn raw(&self, i: usize, j: usize) -> f64 {
        self.cross[i * self.dim() + j] / self.n as f64
    }

    /// Unbiased sample covariance.
    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        let n = self.n as f64;
        (self.cross[i * self.dim() + j] - self.sum[i] * self.sum[j] / n) / (n - 1.0)
    }

    pub fn variance(&self, i: usize) -> f64 {
        self.covariance(i, i)
    }

    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        self.covariance(i, j) / (self.variance(i) * self.variance(j)).sqrt()
    }

    /// Standard error of the mean of coordinate `i`.
    pub fn std_error(&self, i: usize) -> f64 {
        (self.variance(i) / self.n as f64).sqrt()
    }
}
