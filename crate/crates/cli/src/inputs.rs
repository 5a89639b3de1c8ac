use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use intraday_core::battery::{io::read_spot_csv, SpotPrices};
use intraday_core::estimation::TickDataset;
use intraday_core::model::{MaturityGrid, ModelParams};
use intraday_core::Error;

use crate::failure::{CliResult, Context, Failure};

/// Model parameters, either a plain parameter document or an `estimate` output.
pub fn load_params(path: &Path) -> CliResult<ModelParams> {
    ModelParams::load(path).at(path)
}

pub fn load_ticks(path: &Path, n_products: usize, country: &str) -> CliResult<TickDataset> {
    if n_products == 0 {
        return Err(Failure::input("--products must be positive"));
    }
    Ok(TickDataset::read_csv(path, &MaturityGrid::hourly(n_products), country)?)
}

pub fn load_spot(path: &Path, n_products: usize) -> CliResult<SpotPrices> {
    let file = File::open(path).at(path)?;
    read_spot_csv(file, n_products).map_err(|e| match e {
        Error::Parse { line, message, .. } => Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        }
        .into(),
        other => Failure::from(other),
    })
}

/// `x` for a flat curve or `x1,…,xM`.
pub fn parse_f0(text: &str, n_products: usize) -> CliResult<Vec<f64>> {
    let values = text
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| Failure::input(format!("initial prices '{text}' are not numbers")))?;
    match values.len() {
        1 => Ok(vec![values[0]; n_products]),
        n if n == n_products => Ok(values),
        n => Err(Failure::input(format!("{n} initial prices for {n_products} products"))),
    }
}

/// Buffered file writer, flushed by [`write_file`].
pub fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).at(dir)?;
    }
    Ok(BufWriter::new(File::create(path).at(path)?))
}

pub fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> CliResult<()>) -> CliResult<()> {
    let mut out = create(path)?;
    body(&mut out)?;
    out.flush().at(path)
}

/// Comma-separated list of `T`.
pub fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>, String> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<T>().map_err(|_| format!("'{s}' is not valid")))
        .collect()
}
