use std::io::Write;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rayon::prelude::*;

use super::covariation::EstimationWindows;
use super::estimate::{estimate, FittedParams};
use super::ticks::TickDataset;
use crate::error::Result;

/// Re-estimation dates and lookback.
#[derive(Debug, Clone, PartialEq)]
pub struct RollingSchedule {
    /// Each estimate uses sessions delivered in `[start - lookback_days, start - 1]`.
    pub week_starts: Vec<NaiveDate>,
    pub lookback_days: u64,
}

impl RollingSchedule {
    /// Every Monday whose full 28-day lookback lies within the dataset's date range.
    pub fn weekly(dataset: &TickDataset) -> Self {
        let lookback_days = 28;
        let dates = dataset.sessions.iter().map(|s| s.delivery_date);
        let (Some(first), Some(last)) = (dates.clone().min(), dates.max()) else {
            return Self {
                week_starts: Vec::new(),
                lookback_days,
            };
        };
        let earliest = first + Days::new(lookback_days);
        let offset = (7 + Weekday::Mon.num_days_from_monday() as i64 - earliest.weekday().num_days_from_monday() as i64) % 7;
        let mut w = earliest + Days::new(offset as u64);
        let mut week_starts = Vec::new();
        while w - Days::new(1) <= last {
            week_starts.push(w);
            w = w + Days::new(7);
        }
        Self {
            week_starts,
            lookback_days,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RollingRow {
    pub week_start: NaiveDate,
    pub fitted: FittedParams,
}

impl RollingRow {
    /// `σ` proxy, NaN when `κ̂ = 0`.
    pub fn sigma_proxy(&self) -> f64 {
        self.fitted.params.volatility_proxy().unwrap_or(f64::NAN)
    }

    /// Correlation of consecutive hourly maturities.
    pub fn rho_proxy(&self) -> f64 {
        self.fitted.params.correlation_proxy(1.0).unwrap_or(f64::NAN)
    }
}

/// Re-estimates on each lookback window, re-cleaning the raw ticks of that window.
/// Windows without sessions or where estimation fails are skipped with a warning.
pub fn rolling_estimate(raw: &TickDataset, windows: &EstimationWindows, schedule: &RollingSchedule) -> Result<Vec<RollingRow>> {
    windows.validate(&raw.grid)?;
    let rows: Vec<Option<RollingRow>> = schedule
        .week_starts
        .par_iter()
        .map(|&week_start| {
            let from = week_start - Days::new(schedule.lookback_days);
            let to = week_start - Days::new(1);
            let subset = raw.between(from, to);
            if subset.sessions.is_empty() {
                log::warn!("no sessions in the lookback of {week_start}; skipped");
                return None;
            }
            match estimate(&subset, windows) {
                Ok(fitted) => Some(RollingRow { week_start, fitted }),
                Err(e) => {
                    log::warn!("estimation for {week_start} failed: {e}; skipped");
                    None
                }
            }
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// `week_start,kappa,mu,mu_c,sigma_proxy,rho_proxy`
pub fn write_rolling_csv<W: Write>(rows: &[RollingRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["week_start", "kappa", "mu", "mu_c", "sigma_proxy", "rho_proxy"])?;
    for r in rows {
        let p = &r.fitted.params;
        w.write_record([
            r.week_start.format("%Y-%m-%d").to_string(),
            p.kappa.to_string(),
            p.mu.to_string(),
            p.mu_c.to_string(),
            r.sigma_proxy().to_string(),
            r.rho_proxy().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::ticks::SessionTicks;
    use crate::model::MaturityGrid;

    fn empty_sessions(first: NaiveDate, days: u64) -> TickDataset {
        let grid = MaturityGrid::hourly(2);
        let sessions = (0..days)
            .map(|i| SessionTicks {
                delivery_date: first + Days::new(i),
                products: vec![Vec::new(); 2],
            })
            .collect();
        TickDataset::new(grid, sessions, "DE").unwrap()
    }

    #[test]
    fn eight_weeks_give_five_mondays() {
        let monday = NaiveDate::from_ymd_opt(2022, 1, 3).unwrap();
        let s = RollingSchedule::weekly(&empty_sessions(monday, 56));
        assert_eq!(s.week_starts.len(), 5);
        assert_eq!(s.week_starts[0], monday + Days::new(28));
        assert!(s.week_starts.iter().all(|d| d.weekday() == Weekday::Mon));
    }

    #[test]
    fn unaligned_start_rounds_up_to_monday() {
        let wednesday = NaiveDate::from_ymd_opt(2022, 1, 5).unwrap();
        let s = RollingSchedule::weekly(&empty_sessions(wednesday, 40));
        // sessions Jan 5 ..= Feb 13: the Feb 14 lookback [Jan 17, Feb 13] is still covered
        let feb7 = NaiveDate::from_ymd_opt(2022, 2, 7).unwrap();
        assert_eq!(s.week_starts, vec![feb7, feb7 + Days::new(7)]);
    }

    #[test]
    fn empty_schedule_gives_no_rows() {
        let ds = empty_sessions(NaiveDate::from_ymd_opt(2022, 1, 3).unwrap(), 10);
        let schedule = RollingSchedule::weekly(&ds);
        assert!(schedule.week_starts.is_empty());
        let w = EstimationWindows::standard(&ds.grid);
        assert!(rolling_estimate(&ds, &w, &schedule).unwrap().is_empty());
    }
}
