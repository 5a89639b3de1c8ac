use std::path::PathBuf;

use clap::ValueEnum;
use intraday_core::simulation::{io::PathBinaryWriter, io::PathCsvWriter, simulate_batch, GeneratorKind, SimConfig};
use serde_json::json;

use crate::failure::{CliResult, Failure};
use crate::inputs::{load_params, parse_f0, write_file};
use crate::manifest::{sidecar, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Binary,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Model parameter JSON.
    params: PathBuf,
    #[arg(long, default_value_t = 1000)]
    n_paths: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// thinning, decomposition or diffusion.
    #[arg(long, default_value = "thinning")]
    generator: GeneratorKind,
    /// Output grid step in hours; the grid runs from the session open to the last cutoff.
    #[arg(long, default_value_t = 1.0)]
    grid: f64,
    /// Initial prices, EUR/MWh: one value for all products or one per product.
    #[arg(long, default_value = "0")]
    f0: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: PathBuf,
}

/// `0, step, 2·step, …` up to and including `horizon`.
pub fn grid_times(step: f64, horizon: f64) -> CliResult<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Failure::input(format!("grid step {step} must be positive")));
    }
    let n = (horizon / step + 1e-9).floor() as usize;
    let mut times: Vec<f64> = (0..=n).map(|k| k as f64 * step).collect();
    if horizon - times[n] > 1e-9 {
        times.push(horizon);
    }
    Ok(times)
}

pub fn run(args: Args) -> CliResult<()> {
    let mut manifest = RunManifest::start("simulate");
    manifest.params(&args.params)?;
    manifest.seed = Some(args.seed);
    let params = load_params(&args.params)?;
    let f0 = parse_f0(&args.f0, params.n_products())?;
    let times = grid_times(args.grid, params.grid.horizon())?;
    let config = SimConfig {
        n_paths: args.n_paths,
        master_seed: args.seed,
        generator: args.generator,
    };
    let stream = simulate_batch(&params, &f0, &times, &config)?;
    write_file(&args.out, |out| {
        match args.format {
            Format::Csv => {
                let mut w = PathCsvWriter::new(out)?;
                for (i, path) in stream.enumerate() {
                    w.write_path(i as u64, &path)?;
                }
                w.finish()?;
            }
            Format::Binary => {
                let mut w = PathBinaryWriter::new(out, &f0, &times, args.n_paths)?;
                for path in stream {
                    w.write_path(&path)?;
                }
                w.finish()?;
            }
        }
        Ok(())
    })?;
    manifest.settings(json!({
        "n_paths": args.n_paths,
        "generator": args.generator,
        "grid_step_h": args.grid,
        "f0_eur_mwh": f0,
        "format": format!("{:?}", args.format).to_lowercase(),
        "units": { "time": "hours since 15:00 on D-1", "price": "EUR/MWh" },
    }));
    manifest.finish(&[&args.out], &sidecar(&args.out))
}
