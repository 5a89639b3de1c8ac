use std::fs::File;
use std::path::{Path, PathBuf};

use intraday_core::battery::{
    backtest, io::read_policy, spot_backtest, DailyGain, DecisionSchedule, SpotPrices, Strategy, ValuationReport,
};
use intraday_core::model::MaturityGrid;
use serde_json::json;

use crate::failure::{CliResult, Context, Failure};
use crate::inputs::{load_spot, load_ticks, write_file};
use crate::manifest::{sidecar, RunManifest};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Policy file written by `value`.
    policy: PathBuf,
    /// Tick CSV of the sessions to trade.
    ticks: PathBuf,
    /// Day-ahead price CSV: delivery_date,product,spot_price.
    spot: PathBuf,
    #[arg(long, default_value = "unknown")]
    country: String,
    /// Daily gain CSV; the annual summary goes next to it.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: Args) -> CliResult<()> {
    let mut manifest = RunManifest::start("backtest");
    manifest.input(&args.policy)?;
    manifest.input(&args.ticks)?;
    manifest.input(&args.spot)?;
    let policy = read_policy(File::open(&args.policy).at(&args.policy)?).at(&args.policy)?;
    let n = policy.schedule.n_steps();
    let grid = MaturityGrid::hourly(n);
    let expected = DecisionSchedule::with_delay(&grid, policy.schedule.p, policy.schedule.delay, policy.schedule.timing)?;
    if expected != policy.schedule {
        return Err(Failure::input(format!(
            "{}: the policy was not trained on the hourly delivery grid",
            args.policy.display()
        )));
    }
    let observed = load_ticks(&args.ticks, n, &args.country)?;
    let spot = load_spot(&args.spot, n)?;

    let mut days = Vec::with_capacity(2 * observed.n_sessions());
    for session in &observed.sessions {
        let date = session.delivery_date;
        let day_ahead = day_ahead(&spot, date, &args.spot)?;
        let s = spot_backtest(&policy.spec, &policy.schedule, session, day_ahead)?;
        days.push(DailyGain {
            delivery_date: date,
            strategy: Strategy::Spot,
            p: None,
            gain_eur: s.gain,
            optimisation_value_eur: None,
            fallbacks: s.fallbacks,
        });
        let b = backtest(&policy, session, day_ahead)?;
        days.push(DailyGain {
            delivery_date: date,
            strategy: Strategy::trained_on(policy.generator),
            p: Some(policy.schedule.p),
            gain_eur: b.gain,
            optimisation_value_eur: None,
            fallbacks: b.fallbacks,
        });
    }
    let report = ValuationReport::merge([ValuationReport { days }])?;
    let annual = write_report(&report, &args.out)?;
    manifest.settings(json!({ "sessions": observed.n_sessions(), "country": args.country }));
    manifest.finish(&[&args.out, &annual], &sidecar(&args.out))
}

pub fn day_ahead<'a>(spot: &'a SpotPrices, date: chrono::NaiveDate, path: &Path) -> CliResult<&'a [f64]> {
    spot.get(&date)
        .map(Vec::as_slice)
        .ok_or_else(|| Failure::input(format!("{}: no day-ahead prices for {date}", path.display())))
}

/// Writes the daily CSV at `out` and the annual table next to it; returns the latter's path.
pub fn write_report(report: &ValuationReport, out: &Path) -> CliResult<PathBuf> {
    write_file(out, |w| Ok(report.write_daily_csv(w)?))?;
    let annual = annual_path(out);
    write_file(&annual, |w| Ok(report.write_annual_csv(w)?))?;
    Ok(annual)
}

/// `gains.csv` → `gains.annual.csv`.
pub fn annual_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.annual.csv"))
}
