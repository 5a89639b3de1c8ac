//! Policy and day-ahead price files.
//!
//! Policy layout, all little-endian:
//!
//! ```text
//! magic        8 bytes  "IDBPOL01"
//! battery      4 × f64  capacity, power, efficiency, initial stock
//! generator    u8       0 thinning, 1 decomposition, 2 diffusion
//! timing       u8       0 decision time, 1 next decision
//! p            u16
//! delay        f64
//! n_steps      u32
//! times        n_steps × f64 decision times, n_steps × f64 feature times
//! n_levels     u32
//! per step, per level:
//!   present    u8
//!   if present:
//!     dim        u32
//!     blocks     dim × u32
//!     per split level: count u32, count × f64 thresholds
//!     n_coefs    u32, n_coefs × f64 (per cell: intercept, then dim slopes)
//! ```

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::NaiveDate;

use super::campaign::SpotPrices;
use super::optimize::Policy;
use super::regression::LocalLinearFit;
use super::schedule::{DecisionSchedule, FeatureTiming};
use super::spec::BatterySpec;
use crate::error::{Error, Result};
use crate::simulation::GeneratorKind;

pub const POLICY_MAGIC: &[u8; 8] = b"IDBPOL01";

fn put_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_u32<W: Write>(w: &mut W, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit in u32")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub fn write_policy<W: Write>(policy: &Policy, mut out: W) -> Result<()> {
    let w = &mut out;
    w.write_all(POLICY_MAGIC)?;
    let s = &policy.spec;
    for v in [s.capacity, s.power, s.efficiency, s.initial_stock] {
        put_f64(w, v)?;
    }
    let gen = match policy.generator {
        GeneratorKind::Thinning => 0u8,
        GeneratorKind::Decomposition => 1,
        GeneratorKind::Diffusion => 2,
    };
    let sched = &policy.schedule;
    let timing = match sched.timing {
        FeatureTiming::DecisionTime => 0u8,
        FeatureTiming::NextDecision => 1,
    };
    w.write_all(&[gen, timing])?;
    w.write_all(&(sched.p as u16).to_le_bytes())?;
    put_f64(w, sched.delay)?;
    put_u32(w, sched.n_steps())?;
    for &t in sched.decision_times.iter().chain(&sched.feature_times) {
        put_f64(w, t)?;
    }
    put_u32(w, s.n_levels())?;
    for row in &policy.surfaces {
        for surface in row {
            let Some(f) = surface else {
                w.write_all(&[0])?;
                continue;
            };
            w.write_all(&[1])?;
            put_u32(w, f.dim())?;
            for &b in f.blocks() {
                put_u32(w, b)?;
            }
            for level in f.thresholds() {
                put_u32(w, level.len())?;
                for &t in level {
                    put_f64(w, t)?;
                }
            }
            put_u32(w, f.coefficients().len())?;
            for &c in f.coefficients() {
                put_f64(w, c)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.inner
            .read_exact(&mut b)
            .map_err(|e| Error::Format(format!("truncated policy file: {e}")))?;
        Ok(b)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }

    /// A length, bounded to keep corrupt files from allocating wildly.
    fn len(&mut self, max: usize) -> Result<usize> {
        let v = u32::from_le_bytes(self.bytes()?) as usize;
        if v > max {
            return Err(Error::Format(format!("length {v} exceeds {max}")));
        }
        Ok(v)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}

pub fn read_policy<R: Read>(input: R) -> Result<Policy> {
    let mut r = Reader { inner: input };
    if &r.bytes::<8>()? != POLICY_MAGIC {
        return Err(Error::Format("not a policy file (bad magic)".into()));
    }
    let spec = BatterySpec {
        capacity: r.f64()?,
        power: r.f64()?,
        efficiency: r.f64()?,
        initial_stock: r.f64()?,
    };
    spec.validate()?;
    let generator = match r.u8()? {
        0 => GeneratorKind::Thinning,
        1 => GeneratorKind::Decomposition,
        2 => GeneratorKind::Diffusion,
        g => return Err(Error::Format(format!("unknown generator code {g}"))),
    };
    let timing = match r.u8()? {
        0 => FeatureTiming::DecisionTime,
        1 => FeatureTiming::NextDecision,
        t => return Err(Error::Format(format!("unknown feature timing code {t}"))),
    };
    let p = u16::from_le_bytes(r.bytes()?) as usize;
    let delay = r.f64()?;
    let n_steps = r.len(1 << 16)?;
    let decision_times = r.f64s(n_steps)?;
    let feature_times = r.f64s(n_steps)?;
    let schedule = DecisionSchedule {
        decision_times,
        feature_times,
        p,
        delay,
        timing,
    };
    schedule.validate()?;
    let n_levels = r.len(1 << 16)?;
    if n_levels != spec.n_levels() {
        return Err(Error::Format(format!("{n_levels} stock levels, battery has {}", spec.n_levels())));
    }
    let mut surfaces = Vec::with_capacity(n_steps);
    for _ in 0..n_steps {
        let mut row = Vec::with_capacity(n_levels);
        for _ in 0..n_levels {
            if r.u8()? == 0 {
                row.push(None);
                continue;
            }
            let dim = r.len(64)?;
            let blocks = (0..dim).map(|_| r.len(1 << 10)).collect::<Result<Vec<_>>>()?;
            let mut thresholds = Vec::with_capacity(dim);
            for _ in 0..dim {
                let n = r.len(1 << 24)?;
                thresholds.push(r.f64s(n)?);
            }
            let n = r.len(1 << 26)?;
            let coefs = r.f64s(n)?;
            row.push(Some(LocalLinearFit::from_parts(blocks, thresholds, coefs)?));
        }
        surfaces.push(row);
    }
    let mut rest = [0u8; 1];
    if r.inner.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after policy".into()));
    }
    Ok(Policy {
        spec,
        schedule,
        generator,
        surfaces,
    })
}

#[derive(Debug, serde::Deserialize)]
struct SpotRecord {
    delivery_date: NaiveDate,
    product: usize,
    spot_price: f64,
}

/// Reads `delivery_date,product,spot_price` (1-based products). Every date must list all
/// `n_products` products exactly once.
pub fn read_spot_csv<R: Read>(input: R, n_products: usize) -> Result<SpotPrices> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut raw: BTreeMap<NaiveDate, Vec<Option<f64>>> = BTreeMap::new();
    for (k, rec) in rdr.deserialize::<SpotRecord>().enumerate() {
        let line = k as u64 + 2;
        let bad = |message: String| Error::Parse {
            path: "spot prices".into(),
            line,
            message,
        };
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if !(1..=n_products).contains(&rec.product) {
            return Err(bad(format!("product {} outside 1..={n_products}", rec.product)));
        }
        if !rec.spot_price.is_finite() {
            return Err(bad("spot price is not finite".into()));
        }
        let slot = &mut raw.entry(rec.delivery_date).or_insert_with(|| vec![None; n_products])[rec.product - 1];
        if slot.replace(rec.spot_price).is_some() {
            return Err(bad(format!("duplicate product {} on {}", rec.product, rec.delivery_date)));
        }
    }
    raw.into_iter()
        .map(|(date, prices)| {
            let prices = prices
                .into_iter()
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::Data(format!("day-ahead prices for {date} are incomplete")))?;
            Ok((date, prices))
        })
        .collect()
}

pub fn write_spot_csv<W: Write>(spot: &SpotPrices, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["delivery_date", "product", "spot_price"])?;
    for (date, prices) in spot {
        let d = date.format("%Y-%m-%d").to_string();
        for (m, p) in prices.iter().enumerate() {
            w.write_record([d.clone(), (m + 1).to_string(), p.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spot_csv_round_trip() {
        let mut spot = SpotPrices::new();
        spot.insert(NaiveDate::from_ymd_opt(2022, 3, 1).unwrap(), vec![10.5, -3.25]);
        let mut buf = Vec::new();
        write_spot_csv(&spot, &mut buf).unwrap();
        assert_eq!(read_spot_csv(buf.as_slice(), 2).unwrap(), spot);
    }

    #[test]
    fn spot_csv_errors() {
        let dup = "delivery_date,product,spot_price\n2022-03-01,1,1\n2022-03-01,1,2\n";
        assert!(matches!(read_spot_csv(dup.as_bytes(), 2), Err(Error::Parse { line: 3, .. })));
        let missing = "delivery_date,product,spot_price\n2022-03-01,1,1\n";
        assert!(matches!(read_spot_csv(missing.as_bytes(), 2), Err(Error::Data(_))));
        let bad = "delivery_date,product,spot_price\n2022-03-01,x,1\n";
        assert!(matches!(read_spot_csv(bad.as_bytes(), 2), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn rejects_bad_magic() {
        assert!(matches!(read_policy(&b"NOTAPOLICY"[..]), Err(Error::Format(_))));
    }
}
