use std::path::PathBuf;

use intraday_core::battery::{backtest_campaign, CampaignConfig, FeatureTiming, WeeklyParams, DEFAULT_DELAY};
use intraday_core::estimation::{rolling_estimate, EstimationWindows, RollingSchedule};
use intraday_core::simulation::GeneratorKind;
use serde_json::json;

use super::backtest::write_report;
use super::value::{BatteryFile, DEFAULT_PATHS};
use crate::failure::{CliResult, Failure};
use crate::inputs::{load_params, load_spot, load_ticks, parse_list};
use crate::manifest::{sidecar, RunManifest};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Tick CSV of the sessions to trade.
    ticks: PathBuf,
    /// Day-ahead price CSV.
    spot: PathBuf,
    /// Battery JSON.
    battery: PathBuf,
    /// Model parameters used for every day.
    #[arg(long, required_unless_present = "reestimate", conflicts_with = "reestimate")]
    params: Option<PathBuf>,
    /// Re-estimate every Monday on the previous four weeks of the tick file instead.
    #[arg(long)]
    reestimate: bool,
    /// Comma-separated feature counts.
    #[arg(long, default_value = "1,3,5", value_parser = parse_list::<usize>)]
    p: std::vec::Vec<usize>,
    /// Comma-separated training generators, at most one jump generator.
    #[arg(long, default_value = "thinning,diffusion", value_parser = parse_list::<GeneratorKind>)]
    generators: std::vec::Vec<GeneratorKind>,
    #[arg(long)]
    n_paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "decision_time")]
    timing: FeatureTiming,
    #[arg(long, default_value_t = DEFAULT_DELAY)]
    delay: f64,
    #[arg(long, default_value_t = 24)]
    products: usize,
    #[arg(long, default_value = "unknown")]
    country: String,
    /// Daily gain CSV; the annual summary goes next to it.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: Args) -> CliResult<()> {
    let mut manifest = RunManifest::start("campaign");
    manifest.input(&args.ticks)?;
    manifest.input(&args.spot)?;
    manifest.input(&args.battery)?;
    let battery = BatteryFile::load(&args.battery)?;
    let observed = load_ticks(&args.ticks, args.products, &args.country)?;
    let spot = load_spot(&args.spot, args.products)?;
    let dates = || observed.sessions.iter().map(|s| s.delivery_date);
    let (Some(first), Some(last)) = (dates().min(), dates().max()) else {
        return Err(Failure::input(format!("{}: no sessions", args.ticks.display())));
    };
    let weekly = match &args.params {
        Some(path) => {
            manifest.params(path)?;
            WeeklyParams::constant(&load_params(path)?, first, last)
        }
        None => {
            let windows = EstimationWindows::standard(&observed.grid);
            let rows = rolling_estimate(&observed, &windows, &RollingSchedule::weekly(&observed))?;
            if rows.is_empty() {
                return Err(Failure::input("no weekly estimate: re-estimation needs 28 days before a Monday"));
            }
            WeeklyParams::from_rolling(&rows)
        }
    };
    let seed = args.seed.or(battery.seed).unwrap_or(0);
    manifest.seed = Some(seed);
    let n_paths = args.n_paths.or(battery.n_paths).unwrap_or(DEFAULT_PATHS);
    let mut config = CampaignConfig::new(battery.spec, args.p.clone(), args.generators.clone(), n_paths, seed);
    config.timing = args.timing;
    config.delay = args.delay;

    let report = backtest_campaign(&observed, &weekly, &spot, &config)?;
    let annual = write_report(&report, &args.out)?;
    manifest.settings(json!({
        "p": args.p,
        "generators": args.generators,
        "n_paths": n_paths,
        "timing": args.timing,
        "delay_h": args.delay,
        "reestimate": args.reestimate,
        "battery": battery.spec,
        "country": args.country,
    }));
    manifest.finish(&[&args.out, &annual], &sidecar(&args.out))
}
