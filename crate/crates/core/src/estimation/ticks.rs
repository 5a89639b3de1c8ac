use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::model::{MaturityGrid, TICK_SIZE};
use crate::simulation::EventPath;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tick {
    /// Session hours.
    pub time: f64,
    /// EUR/MWh.
    pub price: f64,
}

/// Transactions of one trading session, per product, strictly increasing in time.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionTicks {
    pub delivery_date: NaiveDate,
    pub products: Vec<Vec<Tick>>,
}

impl SessionTicks {
    pub fn n_products(&self) -> usize {
        self.products.len()
    }

    /// Session observed from a simulated path: an opening trade at `t = 0` at `f0`, then one
    /// trade per jump up to each product's cutoff.
    pub fn from_event_path(path: &EventPath, grid: &MaturityGrid, delivery_date: NaiveDate) -> Result<Self> {
        if path.n_products() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "path has {} products, grid has {}",
                path.n_products(),
                grid.len()
            )));
        }
        let products = (0..grid.len())
            .map(|m| {
                let cutoff = grid.cutoff(m);
                let mut level = path.f0[m];
                let mut ticks = vec![Tick { time: 0.0, price: level }];
                for e in path.events(m).iter().take_while(|e| e.time <= cutoff) {
                    level += e.size;
                    push_collapsing(&mut ticks, Tick { time: e.time, price: level });
                }
                ticks
            })
            .collect();
        Ok(Self {
            delivery_date,
            products,
        })
    }
}

/// Appends a tick; a tick at the same timestamp replaces the previous one.
fn push_collapsing(ticks: &mut Vec<Tick>, tick: Tick) {
    match ticks.last_mut() {
        Some(last) if last.time == tick.time => *last = tick,
        _ => ticks.push(tick),
    }
}

/// Cleaned or raw transactions over many sessions of the same product layout.
#[derive(Debug, Clone, PartialEq)]
pub struct TickDataset {
    pub grid: MaturityGrid,
    pub sessions: Vec<SessionTicks>,
    pub country: String,
    pub tick_size: f64,
}

impl TickDataset {
    pub fn new(grid: MaturityGrid, sessions: Vec<SessionTicks>, country: impl Into<String>) -> Result<Self> {
        let ds = Self {
            grid,
            sessions,
            country: country.into(),
            tick_size: TICK_SIZE,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        for s in &self.sessions {
            if s.products.len() != self.grid.len() {
                return Err(Error::InvalidArgument(format!(
                    "session {} has {} products, grid has {}",
                    s.delivery_date,
                    s.products.len(),
                    self.grid.len()
                )));
            }
            for (m, ticks) in s.products.iter().enumerate() {
                let cutoff = self.grid.cutoff(m);
                if ticks.iter().any(|t| !(t.time >= 0.0 && t.time <= cutoff + 1e-9) || !t.price.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "session {} product {}: trades outside [0, {cutoff}] or non-finite prices",
                        s.delivery_date,
                        m + 1
                    )));
                }
                if ticks.windows(2).any(|w| w[0].time >= w[1].time) {
                    return Err(Error::InvalidArgument(format!(
                        "session {} product {}: timestamps not strictly increasing",
                        s.delivery_date,
                        m + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n_sessions(&self) -> usize {
        self.sessions.len()
    }

    pub fn n_products(&self) -> usize {
        self.grid.len()
    }

    pub fn n_ticks(&self) -> usize {
        self.sessions
            .iter()
            .flat_map(|s| s.products.iter())
            .map(Vec::len)
            .sum()
    }

    /// Sessions with delivery date in `[from, to]`.
    pub fn between(&self, from: NaiveDate, to: NaiveDate) -> TickDataset {
        TickDataset {
            grid: self.grid.clone(),
            sessions: self
                .sessions
                .iter()
                .filter(|s| s.delivery_date >= from && s.delivery_date <= to)
                .cloned()
                .collect(),
            country: self.country.clone(),
            tick_size: self.tick_size,
        }
    }

    /// Reads `delivery_date,product,timestamp_s,price` rows (ISO dates, products 1..=M,
    /// seconds since session open). Rows may come in any order; trades sharing a timestamp
    /// collapse to the last one in file order.
    pub fn read_csv(path: impl AsRef<Path>, grid: &MaturityGrid, country: &str) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)?;
        Self::from_reader(file, path, grid, country)
    }

    pub fn from_reader<R: Read>(input: R, source: &Path, grid: &MaturityGrid, country: &str) -> Result<Self> {
        let parse_err = |line: u64, message: String| Error::Parse {
            path: source.to_path_buf(),
            line,
            message,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(input);
        let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| parse_err(1, format!("missing column '{name}'")))
        };
        let (c_date, c_prod, c_ts, c_price) = (col("delivery_date")?, col("product")?, col("timestamp_s")?, col("price")?);

        let mut by_date: BTreeMap<NaiveDate, Vec<Vec<Tick>>> = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                parse_err(line, e.to_string())
            })?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let get = |i: usize| rec.get(i).unwrap_or("");
            let date = NaiveDate::parse_from_str(get(c_date), "%Y-%m-%d")
                .map_err(|e| parse_err(line, format!("delivery_date '{}': {e}", get(c_date))))?;
            let product: usize = get(c_prod)
                .parse()
                .map_err(|_| parse_err(line, format!("product '{}' is not an integer", get(c_prod))))?;
            if product == 0 || product > grid.len() {
                return Err(parse_err(line, format!("product {product} outside 1..={}", grid.len())));
            }
            let ts: f64 = get(c_ts)
                .parse()
                .map_err(|_| parse_err(line, format!("timestamp_s '{}' is not a number", get(c_ts))))?;
            let price: f64 = get(c_price)
                .parse()
                .map_err(|_| parse_err(line, format!("price '{}' is not a number", get(c_price))))?;
            let time = ts / 3600.0;
            let cutoff = grid.cutoff(product - 1);
            if !(time >= 0.0 && time <= cutoff + 1e-9) {
                return Err(parse_err(
                    line,
                    format!("timestamp {ts} s outside the trading window [0, {}] s", cutoff * 3600.0),
                ));
            }
            if !price.is_finite() {
                return Err(parse_err(line, "price is not finite".into()));
            }
            by_date.entry(date).or_insert_with(|| vec![Vec::new(); grid.len()])[product - 1].push(Tick { time, price });
        }
        let sessions = by_date
            .into_iter()
            .map(|(delivery_date, products)| SessionTicks {
                delivery_date,
                products: products
                    .into_iter()
                    .map(|mut ticks| {
                        // stable: equal timestamps keep file order, the last one wins
                        ticks.sort_by(|a, b| a.time.total_cmp(&b.time));
                        let mut out: Vec<Tick> = Vec::with_capacity(ticks.len());
                        for t in ticks {
                            push_collapsing(&mut out, t);
                        }
                        out
                    })
                    .collect(),
            })
            .collect();
        Self::new(grid.clone(), sessions, country)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["delivery_date", "product", "timestamp_s", "price"])?;
        for s in &self.sessions {
            let date = s.delivery_date.format("%Y-%m-%d").to_string();
            for (m, ticks) in s.products.iter().enumerate() {
                for t in ticks {
                    w.write_record([
                        date.clone(),
                        (m + 1).to_string(),
                        (t.time * 3600.0).to_string(),
                        t.price.to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}
