use std::path::PathBuf;

use chrono::NaiveDate;
use intraday_core::battery::{io::write_spot_csv, synthetic_market};
use serde_json::json;

use crate::failure::{CliResult, Context};
use crate::inputs::{load_params, write_file};
use crate::manifest::RunManifest;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Model parameter JSON.
    params: PathBuf,
    /// Consecutive delivery days.
    #[arg(long)]
    days: usize,
    #[arg(long, default_value = "2022-01-03")]
    first_date: NaiveDate,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for ticks.csv and spot.csv.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: Args) -> CliResult<()> {
    let mut manifest = RunManifest::start("synth");
    manifest.params(&args.params)?;
    manifest.seed = Some(args.seed);
    let params = load_params(&args.params)?;
    let market = synthetic_market(&params, args.days, args.first_date, args.seed)?;
    std::fs::create_dir_all(&args.out).at(&args.out)?;
    let ticks = args.out.join("ticks.csv");
    market.observed.write_csv(&ticks).at(&ticks)?;
    let spot = args.out.join("spot.csv");
    write_file(&spot, |w| Ok(write_spot_csv(&market.spot, w)?))?;
    manifest.settings(json!({ "days": args.days, "first_date": args.first_date }));
    manifest.finish(&[&ticks, &spot], &args.out.join("manifest.json"))
}
