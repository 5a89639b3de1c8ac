use std::path::PathBuf;

use clap::ValueEnum;
use intraday_core::estimation::{
    clean, epps_correlation, estimate, rolling_estimate, signature_plot, write_rolling_csv, EstimationWindows,
    RollingSchedule,
};
use serde::Deserialize;
use serde_json::json;

use crate::failure::{CliResult, Context};
use crate::inputs::{load_ticks, write_file};
use crate::manifest::RunManifest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Rolling {
    Weekly,
    None,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Tick CSV: delivery_date,product,timestamp_s,price.
    ticks: PathBuf,
    /// JSON `{"begin": [...], "end": [...]}` of per-product windows in hours; default is the
    /// whole trading window of every product.
    #[arg(long)]
    windows: Option<PathBuf>,
    /// Sampling step, hours.
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    /// Minimal overlap of a product pair, hours.
    #[arg(long, default_value_t = 1.0)]
    small_delta: f64,
    #[arg(long, value_enum, default_value_t = Rolling::None)]
    rolling: Rolling,
    /// Hourly products per session.
    #[arg(long, default_value_t = 24)]
    products: usize,
    #[arg(long, default_value = "unknown")]
    country: String,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Deserialize)]
struct WindowsFile {
    begin: Vec<f64>,
    end: Vec<f64>,
}

/// Sampling steps of the signature plot and Epps curves, hours.
const DIAGNOSTIC_STEPS: [f64; 8] = [1.0 / 60.0, 5.0 / 60.0, 10.0 / 60.0, 0.25, 0.5, 1.0, 2.0, 4.0];
/// Maturity gaps of the Epps curves, hours.
const EPPS_GAPS: [usize; 4] = [1, 2, 4, 8];

pub fn run(args: Args) -> CliResult<()> {
    let mut manifest = RunManifest::start("estimate");
    manifest.input(&args.ticks)?;
    let raw = load_ticks(&args.ticks, args.products, &args.country)?;
    let mut windows = EstimationWindows::standard(&raw.grid);
    if let Some(path) = &args.windows {
        manifest.input(path)?;
        let file: WindowsFile = serde_json::from_str(&std::fs::read_to_string(path).at(path)?).at(path)?;
        windows.begin = file.begin;
        windows.end = file.end;
    }
    windows.delta = args.delta;
    windows.min_overlap = args.small_delta;
    windows.validate(&raw.grid)?;

    std::fs::create_dir_all(&args.out).at(&args.out)?;
    let params_path = args.out.join("params.json");
    let fitted = estimate(&raw, &windows)?;
    std::fs::write(&params_path, fitted.to_json()? + "\n").at(&params_path)?;
    let mut outputs = vec![params_path];

    let cleaning_path = args.out.join("cleaning.json");
    std::fs::write(&cleaning_path, serde_json::to_string_pretty(&fitted.diagnostics.cleaning)? + "\n").at(&cleaning_path)?;
    outputs.push(cleaning_path);

    let (cleaned, _) = clean(&raw);
    let signature_path = args.out.join("signature.csv");
    write_file(&signature_path, |out| {
        use std::io::Write;
        writeln!(out, "product,delta_h,realized_variance_per_h")?;
        for m in 0..cleaned.n_products() {
            for (delta, rv) in signature_plot(&cleaned, m, &DIAGNOSTIC_STEPS)? {
                writeln!(out, "{},{delta},{rv}", m + 1)?;
            }
        }
        Ok(())
    })?;
    outputs.push(signature_path);

    let epps_path = args.out.join("epps.csv");
    let anchor = cleaned.n_products().saturating_sub(1) / 2;
    write_file(&epps_path, |out| {
        use std::io::Write;
        writeln!(out, "product_l,product_m,gap_h,delta_h,correlation")?;
        for gap in EPPS_GAPS {
            let m = anchor + gap;
            if m >= cleaned.n_products() || windows.overlap(anchor, m).is_none() {
                continue;
            }
            for delta in DIAGNOSTIC_STEPS {
                let rho = epps_correlation(&cleaned, &windows, anchor, m, delta)?;
                let rho = rho.map_or(String::new(), |r| r.to_string());
                writeln!(out, "{},{},{gap},{delta},{rho}", anchor + 1, m + 1)?;
            }
        }
        Ok(())
    })?;
    outputs.push(epps_path);

    if args.rolling == Rolling::Weekly {
        let schedule = RollingSchedule::weekly(&raw);
        if schedule.week_starts.is_empty() {
            log::warn!("fewer than {} days of data: no weekly re-estimation", schedule.lookback_days);
        }
        let rows = rolling_estimate(&raw, &windows, &schedule)?;
        let rolling_path = args.out.join("rolling.csv");
        write_file(&rolling_path, |out| Ok(write_rolling_csv(&rows, out)?))?;
        outputs.push(rolling_path);
        let weeks_dir = args.out.join("weekly");
        std::fs::create_dir_all(&weeks_dir).at(&weeks_dir)?;
        for row in &rows {
            let path = weeks_dir.join(format!("{}.json", row.week_start));
            std::fs::write(&path, row.fitted.to_json()? + "\n").at(&path)?;
        }
    }
    manifest.settings(json!({
        "delta_h": args.delta,
        "small_delta_h": args.small_delta,
        "rolling": format!("{:?}", args.rolling).to_lowercase(),
        "products": args.products,
        "country": args.country,
        "windows": { "begin_h": windows.begin, "end_h": windows.end },
    }));
    let outputs: Vec<&std::path::Path> = outputs.iter().map(PathBuf::as_path).collect();
    manifest.finish(&outputs, &args.out.join("manifest.json"))
}
