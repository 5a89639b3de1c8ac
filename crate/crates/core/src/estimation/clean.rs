use serde::{Deserialize, Serialize};

use super::ticks::{Tick, TickDataset};

/// Multiple of the pooled return standard deviation above which a trade is dropped.
pub const OUTLIER_SIGMAS: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductCleaning {
    /// 1-based product number.
    pub product: usize,
    pub removed: usize,
    /// Returns examined (trades minus session openings).
    pub total: usize,
    /// EUR/MWh.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CleaningReport {
    pub products: Vec<ProductCleaning>,
}

impl CleaningReport {
    pub fn removed(&self) -> usize {
        self.products.iter().map(|p| p.removed).sum()
    }

    pub fn total(&self) -> usize {
        self.products.iter().map(|p| p.total).sum()
    }

    pub fn removed_fraction(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => self.removed() as f64 / n as f64,
        }
    }
}

/// Return in whole ticks; traded prices live on the tick grid, so this only strips
/// representation error.
#[inline]
fn ticks_between(from: f64, to: f64, tick: f64) -> f64 {
    ((to - from) / tick).round()
}

fn pooled_std<'a>(series: impl Iterator<Item = &'a [Tick]>, tick: f64) -> (f64, usize) {
    let (mut n, mut sum, mut sum2) = (0usize, 0.0, 0.0);
    for ticks in series {
        for w in ticks.windows(2) {
            let r = ticks_between(w[0].price, w[1].price, tick);
            n += 1;
            sum += r;
            sum2 += r * r;
        }
    }
    if n < 2 {
        return (0.0, n);
    }
    let mean = sum / n as f64;
    let var = ((sum2 - n as f64 * mean * mean) / (n as f64 - 1.0)).max(0.0);
    (var.sqrt(), n)
}

/// Drops trades whose return exceeds five pooled standard deviations.
///
/// The standard deviation pools every return of a delivery period across sessions. Returns
/// are then recomputed against the last surviving trade, so an isolated spike and its
/// reversal cost a single trade. A zero standard deviation removes nothing.
pub fn clean(raw: &TickDataset) -> (TickDataset, CleaningReport) {
    let mut out = raw.clone();
    let mut report = CleaningReport::default();
    for m in 0..raw.n_products() {
        let (std_ticks, total) = pooled_std(raw.sessions.iter().map(|s| s.products[m].as_slice()), raw.tick_size);
        let threshold = OUTLIER_SIGMAS * std_ticks;
        let mut removed = 0;
        if std_ticks > 0.0 {
            for session in &mut out.sessions {
                let ticks = &mut session.products[m];
                let mut kept: Vec<Tick> = Vec::with_capacity(ticks.len());
                for t in ticks.iter() {
                    match kept.last() {
                        Some(prev) if ticks_between(prev.price, t.price, raw.tick_size).abs() > threshold => {
                            removed += 1
                        }
                        _ => kept.push(*t),
                    }
                }
                *ticks = kept;
            }
        }
        report.products.push(ProductCleaning {
            product: m + 1,
            removed,
            total,
            threshold: threshold * raw.tick_size,
        });
    }
    (out, report)
}
