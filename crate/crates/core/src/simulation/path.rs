use crate::error::{Error, Result};
use crate::model::MaturityGrid;

/// Source of a jump event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    Idiosyncratic,
    /// Atom of a common measure; the id is unique within one path.
    Common(u64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    /// Signed jump, EUR/MWh.
    pub size: f64,
    pub origin: Origin,
}

/// Receives the events of one simulated session, in generation (not time) order.
pub trait EventSink {
    fn record(&mut self, product: usize, time: f64, size: f64, origin: Origin);
}

/// Every jump of every product over one session.
#[derive(Debug, Clone, PartialEq)]
pub struct EventPath {
    pub f0: Vec<f64>,
    events: Vec<Vec<Event>>,
}

impl EventPath {
    pub fn new(f0: Vec<f64>) -> Self {
        let events = vec![Vec::new(); f0.len()];
        Self { f0, events }
    }

    pub fn n_products(&self) -> usize {
        self.f0.len()
    }

    /// Events of product `m`, sorted by time.
    pub fn events(&self, m: usize) -> &[Event] {
        &self.events[m]
    }

    pub fn n_events(&self) -> usize {
        self.events.iter().map(Vec::len).sum()
    }

    /// Sorts each product's events by time. Generators call this before returning.
    pub fn finish(mut self) -> Self {
        for ev in &mut self.events {
            ev.sort_by(|a, b| a.time.total_cmp(&b.time));
        }
        self
    }

    /// Price of product `m` at `t`, right-continuous, ignoring any trading cutoff.
    pub fn price_at(&self, m: usize, t: f64) -> f64 {
        let ev = &self.events[m];
        let n = ev.partition_point(|e| e.time <= t);
        self.f0[m] + ev[..n].iter().map(|e| e.size).sum::<f64>()
    }
}

impl EventSink for EventPath {
    fn record(&mut self, product: usize, time: f64, size: f64, origin: Origin) {
        self.events[product].push(Event { time, size, origin });
    }
}

/// A path sampled on a time grid, product-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub grid_times: Vec<f64>,
    n_products: usize,
    prices: Vec<f64>,
}

impl GridPath {
    pub fn from_prices(grid_times: Vec<f64>, n_products: usize, prices: Vec<f64>) -> Result<Self> {
        if prices.len() != n_products * grid_times.len() {
            return Err(Error::InvalidArgument(format!(
                "{} prices for {} products on {} grid points",
                prices.len(),
                n_products,
                grid_times.len()
            )));
        }
        Ok(Self {
            grid_times,
            n_products,
            prices,
        })
    }

    pub fn n_products(&self) -> usize {
        self.n_products
    }

    pub fn len(&self) -> usize {
        self.grid_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid_times.is_empty()
    }

    pub fn price(&self, m: usize, k: usize) -> f64 {
        self.prices[m * self.grid_times.len() + k]
    }

    /// Prices of product `m` on the grid.
    pub fn series(&self, m: usize) -> &[f64] {
        let n = self.grid_times.len();
        &self.prices[m * n..(m + 1) * n]
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    /// Price at an arbitrary time by step interpolation (the last grid value at or before
    /// `t`), `None` before the first grid point.
    pub fn price_at(&self, m: usize, t: f64) -> Option<f64> {
        let k = self.grid_times.partition_point(|&g| g <= t);
        (k > 0).then(|| self.price(m, k - 1))
    }
}

pub(crate) fn check_grid_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidArgument("grid times must be finite and nonnegative".into()));
    }
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("grid times must be strictly increasing".into()));
    }
    Ok(())
}

/// Accumulates jumps straight onto a time grid without storing events.
///
/// A jump at `s` moves every grid value at `t ≥ s`; jumps after the product's trading cutoff
/// are dropped so the price stays frozen at its last tradable value.
#[derive(Debug, Clone)]
pub struct GridAccumulator<'a> {
    times: &'a [f64],
    cutoffs: Vec<f64>,
    increments: Vec<f64>,
}

impl<'a> GridAccumulator<'a> {
    pub fn new(grid: &MaturityGrid, times: &'a [f64]) -> Self {
        let cutoffs = (0..grid.len()).map(|m| grid.cutoff(m)).collect();
        Self {
            times,
            cutoffs,
            increments: vec![0.0; grid.len() * times.len()],
        }
    }

    pub fn finish(self, f0: &[f64]) -> GridPath {
        let n = self.times.len();
        let mut prices = self.increments;
        for (m, row) in prices.chunks_mut(n.max(1)).enumerate().take(f0.len()) {
            let mut level = f0[m];
            for v in row.iter_mut() {
                level += *v;
                *v = level;
            }
        }
        GridPath {
            grid_times: self.times.to_vec(),
            n_products: f0.len(),
            prices,
        }
    }
}

impl EventSink for GridAccumulator<'_> {
    #[inline]
    fn record(&mut self, product: usize, time: f64, size: f64, _origin: Origin) {
        if time > self.cutoffs[product] {
            return;
        }
        let k = self.times.partition_point(|&g| g < time);
        if k < self.times.len() {
            self.increments[product * self.times.len() + k] += size;
        }
    }
}

/// Samples an event path onto `times`: `f0 + Σ jumps at or before t`, frozen after each
/// product's cutoff.
pub fn sample_onto_grid(path: &EventPath, grid: &MaturityGrid, times: &[f64]) -> Result<GridPath> {
    check_grid_times(times)?;
    if path.n_products() != grid.len() {
        return Err(Error::InvalidArgument(format!(
            "path has {} products, grid has {}",
            path.n_products(),
            grid.len()
        )));
    }
    let mut acc = GridAccumulator::new(grid, times);
    for m in 0..path.n_products() {
        for e in path.events(m) {
            acc.record(m, e.time, e.size, e.origin);
        }
    }
    Ok(acc.finish(&path.f0))
}
