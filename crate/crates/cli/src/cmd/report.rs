use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use clap::ValueEnum;
use intraday_core::battery::{write_annual_csv, ValuationReport};
use serde_json::json;

use crate::failure::{CliResult, Context};
use crate::inputs::write_file;
use crate::manifest::{sidecar, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Daily gain CSVs from `backtest` or `campaign`.
    inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(args: Args) -> CliResult<()> {
    let mut manifest = RunManifest::start("report");
    let mut reports = Vec::with_capacity(args.inputs.len());
    for path in &args.inputs {
        manifest.input(path)?;
        reports.push(ValuationReport::read_daily_csv(File::open(path).at(path)?).at(path)?);
    }
    let rows = ValuationReport::merge(reports)?.annual();
    let body = |out: &mut dyn Write| -> CliResult<()> {
        match args.format {
            Format::Csv => write_annual_csv(&rows, out)?,
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, &rows)?;
                writeln!(out)?;
            }
        }
        Ok(())
    };
    match &args.out {
        Some(path) => {
            write_file(path, |w| body(w))?;
            manifest.settings(json!({ "format": format!("{:?}", args.format).to_lowercase() }));
            manifest.finish(&[path], &sidecar(path))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)?;
            Ok(lock.flush()?)
        }
    }
}
