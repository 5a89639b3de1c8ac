use std::ops::Range;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Blocks per dimension of a local regression partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeshSpec {
    pub blocks: Vec<usize>,
}

impl MeshSpec {
    /// Four blocks in each of the first four dimensions, one beyond: `4^{min(d, 4)}` cells.
    pub fn adaptive(dim: usize) -> Self {
        Self {
            blocks: (0..dim).map(|k| if k < 4 { 4 } else { 1 }).collect(),
        }
    }

    pub fn uniform(dim: usize, blocks: usize) -> Self {
        Self {
            blocks: vec![blocks.max(1); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.blocks.len()
    }

    pub fn n_cells(&self) -> usize {
        self.blocks.iter().product()
    }
}

/// Piecewise affine regression on an equal-count partition of the sample cloud.
///
/// The samples are sorted on the first feature and cut into equal-count blocks, each block
/// is sorted on the second feature and cut again, and so on. A point belongs to block `b` of
/// a split when it exceeds the first `b` thresholds and not the next one. Every cell carries
/// an ordinary least squares affine fit; cells with fewer than `d + 2` samples or singular
/// normal equations keep their sample mean, and empty cells inherit the mean of the
/// enclosing block.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalLinearFit<T = f64> {
    blocks: Vec<usize>,
    /// Per split level, node-major, `blocks[l] - 1` thresholds per node.
    thresholds: Vec<Vec<T>>,
    /// Per cell: intercept followed by `d` slopes.
    coefs: Vec<T>,
    fallbacks: usize,
    /// Training samples per cell; empty for a fit rebuilt from parts.
    counts: Vec<usize>,
}

/// Equal-count partition of a sample cloud. The samples are reordered so that every node of
/// the split tree, cells included, is a contiguous range of `order`.
struct Partition<T> {
    thresholds: Vec<Vec<T>>,
    order: Vec<usize>,
    /// Per cell: its range and the range of its nearest nonempty enclosing node.
    cells: Vec<(Range<usize>, Range<usize>)>,
}

impl<T: Scalar> Partition<T> {
    fn build(x: &[T], n: usize, blocks: &[usize]) -> Self {
        let mut p = Self {
            thresholds: vec![Vec::new(); blocks.len()],
            order: (0..n).collect(),
            cells: Vec::with_capacity(blocks.iter().product()),
        };
        p.split(x, blocks, 0, 0..n, 0..n);
        p
    }

    fn split(&mut self, x: &[T], blocks: &[usize], level: usize, range: Range<usize>, fallback: Range<usize>) {
        let fallback = if range.is_empty() { fallback } else { range.clone() };
        let d = blocks.len();
        if level == d {
            self.cells.push((range, fallback));
            return;
        }
        let k = blocks[level];
        let key = |i: usize| x[i * d + level];
        let idx = &mut self.order[range.clone()];
        // stable: equal keys keep sample order
        idx.sort_by(|&a, &b| key(a).total_cmp(&key(b)));
        let len = idx.len();
        let mut starts = vec![0; k + 1];
        for b in 1..k {
            let cut = b * len / k;
            let thr = if cut == 0 { T::neg_infinity() } else { key(idx[cut - 1]) };
            self.thresholds[level].push(thr);
            starts[b] = idx.partition_point(|&i| key(i).total_cmp(&thr).is_le());
        }
        starts[k] = len;
        for b in 0..k {
            let sub = range.start + starts[b]..range.start + starts[b + 1].max(starts[b]);
            self.split(x, blocks, level + 1, sub, fallback.clone());
        }
    }
}

/// Centered normal equations of one cell, shared by every target regressed on it.
struct NormalEquations<T> {
    x_bar: Vec<T>,
    a: Vec<T>,
}

impl<T: Scalar> NormalEquations<T> {
    fn new(x: &[T], idx: &[usize], d: usize) -> Self {
        let nf = T::lit(idx.len() as f64);
        let mut x_bar = vec![T::zero(); d];
        for &i in idx {
            for (j, xb) in x_bar.iter_mut().enumerate() {
                *xb = *xb + x[i * d + j];
            }
        }
        x_bar.iter_mut().for_each(|v| *v = *v / nf);
        let mut a = vec![T::zero(); d * d];
        for &i in idx {
            let row = &x[i * d..(i + 1) * d];
            for j in 0..d {
                let xj = row[j] - x_bar[j];
                for l in 0..=j {
                    a[j * d + l] = a[j * d + l] + xj * (row[l] - x_bar[l]);
                }
            }
        }
        for j in 0..d {
            for l in 0..j {
                a[l * d + j] = a[j * d + l];
            }
        }
        Self { x_bar, a }
    }

    /// Intercept and slopes for target `y`, `None` when the system is singular.
    fn solve(&self, x: &[T], y: &[T], idx: &[usize], y_bar: T) -> Option<Vec<T>> {
        let d = self.x_bar.len();
        let mut b = vec![T::zero(); d];
        for &i in idx {
            let yc = y[i] - y_bar;
            for j in 0..d {
                b[j] = b[j] + (x[i * d + j] - self.x_bar[j]) * yc;
            }
        }
        let beta = solve_scaled(&mut self.a.clone(), &mut b, d)?;
        let mut intercept = y_bar;
        for j in 0..d {
            intercept = intercept - beta[j] * self.x_bar[j];
        }
        Some(std::iter::once(intercept).chain(beta).collect())
    }
}

impl<T: Scalar> LocalLinearFit<T> {
    /// Fits `targets` on `features` (row-major, `targets.len()` rows of `mesh.dim()`).
    pub fn fit(features: &[T], targets: &[T], mesh: &MeshSpec) -> Result<Self> {
        Ok(Self::fit_many(features, &[targets], mesh)?.pop().expect("one target"))
    }

    /// Fits several targets on the same features. The partition and the normal equations
    /// depend only on the features, so they are built once; each result equals a separate
    /// [`LocalLinearFit::fit`].
    pub fn fit_many(features: &[T], targets: &[&[T]], mesh: &MeshSpec) -> Result<Vec<Self>> {
        let d = mesh.dim();
        let n = targets.first().map_or(0, |t| t.len());
        if targets.iter().any(|t| t.len() != n) {
            return Err(Error::InvalidArgument("targets differ in length".into()));
        }
        if features.len() != n * d {
            return Err(Error::InvalidArgument(format!(
                "{} feature values for {n} samples of dimension {d}",
                features.len()
            )));
        }
        if n == 0 {
            return Err(Error::Data("no samples to regress".into()));
        }
        if mesh.blocks.contains(&0) {
            return Err(Error::InvalidArgument("every dimension needs at least one block".into()));
        }
        let part = Partition::build(features, n, &mesh.blocks);
        let mut fits: Vec<Self> = targets
            .iter()
            .map(|_| Self {
                blocks: mesh.blocks.clone(),
                thresholds: part.thresholds.clone(),
                coefs: Vec::with_capacity(part.cells.len() * (d + 1)),
                fallbacks: 0,
                counts: part.cells.iter().map(|c| c.0.len()).collect(),
            })
            .collect();
        for (cell, fallback) in &part.cells {
            let idx = &part.order[cell.clone()];
            let normal = (d > 0 && idx.len() >= d + 2).then(|| NormalEquations::new(features, idx, d));
            for (fit, y) in fits.iter_mut().zip(targets) {
                if idx.is_empty() {
                    fit.push_constant(mean(y, &part.order[fallback.clone()]), d);
                    fit.fallbacks += 1;
                    continue;
                }
                let y_bar = mean(y, idx);
                match normal.as_ref().and_then(|ne| ne.solve(features, y, idx, y_bar)) {
                    Some(c) => fit.coefs.extend(c),
                    None => {
                        fit.push_constant(y_bar, d);
                        if d > 0 {
                            fit.fallbacks += 1;
                        }
                    }
                }
            }
        }
        Ok(fits)
    }

    fn push_constant(&mut self, v: T, d: usize) {
        self.coefs.push(v);
        self.coefs.extend(std::iter::repeat_n(T::zero(), d));
    }

    pub fn dim(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn thresholds(&self) -> &[Vec<T>] {
        &self.thresholds
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coefs
    }

    pub fn n_cells(&self) -> usize {
        self.blocks.iter().product()
    }

    /// Cells that kept a constant instead of an affine fit.
    pub fn fallbacks(&self) -> usize {
        self.fallbacks
    }

    /// Training samples that fell in each cell.
    pub fn cell_counts(&self) -> &[usize] {
        &self.counts
    }

    /// Rebuilds a fit from its stored partition and coefficients.
    pub fn from_parts(blocks: Vec<usize>, thresholds: Vec<Vec<T>>, coefs: Vec<T>) -> Result<Self> {
        let d = blocks.len();
        if thresholds.len() != d || blocks.contains(&0) {
            return Err(Error::Format("inconsistent regression partition".into()));
        }
        let mut nodes = 1;
        for (l, &k) in blocks.iter().enumerate() {
            if thresholds[l].len() != nodes * (k - 1) {
                return Err(Error::Format(format!("split level {l} has {} thresholds", thresholds[l].len())));
            }
            nodes *= k;
        }
        if coefs.len() != nodes * (d + 1) {
            return Err(Error::Format(format!("{} coefficients for {nodes} cells", coefs.len())));
        }
        Ok(Self {
            blocks,
            thresholds,
            coefs,
            fallbacks: 0,
            counts: Vec::new(),
        })
    }

    /// Index of the cell containing `x`.
    pub fn cell_of(&self, x: &[T]) -> usize {
        let mut node = 0;
        for (l, &k) in self.blocks.iter().enumerate() {
            let thr = &self.thresholds[l][node * (k - 1)..(node + 1) * (k - 1)];
            let b = thr.partition_point(|t| t.total_cmp(&x[l]).is_lt());
            node = node * k + b;
        }
        node
    }

    pub fn predict(&self, x: &[T]) -> T {
        self.predict_in(self.cell_of(x), x)
    }

    /// Affine fit of `cell` evaluated at `x`; fits sharing a partition share cell indices.
    pub fn predict_in(&self, cell: usize, x: &[T]) -> T {
        let d = self.dim();
        debug_assert_eq!(x.len(), d);
        let c = &self.coefs[cell * (d + 1)..][..d + 1];
        let mut v = c[0];
        for j in 0..d {
            v = v + c[j + 1] * x[j];
        }
        v
    }
}

fn mean<T: Scalar>(y: &[T], idx: &[usize]) -> T {
    if idx.is_empty() {
        return T::zero();
    }
    let s = idx.iter().fold(T::zero(), |acc, &i| acc + y[i]);
    s / T::lit(idx.len() as f64)
}

/// Solves the symmetric system `a β = b` after unit-diagonal scaling, by Gaussian elimination
/// with partial pivoting. `None` when a pivot falls below `√ε` of the scaled matrix.
fn solve_scaled<T: Scalar>(a: &mut [T], b: &mut [T], d: usize) -> Option<Vec<T>> {
    let mut scale = vec![T::zero(); d];
    for j in 0..d {
        let diag = a[j * d + j];
        if !(diag > T::zero()) || !diag.is_finite() {
            return None;
        }
        scale[j] = diag.sqrt().recip();
    }
    for j in 0..d {
        for l in 0..d {
            a[j * d + l] = a[j * d + l] * scale[j] * scale[l];
        }
        b[j] = b[j] * scale[j];
    }
    let tol = T::epsilon().sqrt();
    for col in 0..d {
        let piv = (col..d).max_by(|&r, &s| a[r * d + col].abs().total_cmp(&a[s * d + col].abs()))?;
        if a[piv * d + col].abs() <= tol {
            return None;
        }
        if piv != col {
            for l in 0..d {
                a.swap(piv * d + l, col * d + l);
            }
            b.swap(piv, col);
        }
        for r in col + 1..d {
            let f = a[r * d + col] / a[col * d + col];
            for l in col..d {
                a[r * d + l] = a[r * d + l] - f * a[col * d + l];
            }
            b[r] = b[r] - f * b[col];
        }
    }
    let mut z = vec![T::zero(); d];
    for r in (0..d).rev() {
        let mut s = b[r];
        for l in r + 1..d {
            s = s - a[r * d + l] * z[l];
        }
        z[r] = s / a[r * d + r];
    }
    Some(z.iter().zip(&scale).map(|(&z, &s)| z * s).collect())
}
