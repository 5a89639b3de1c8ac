//! Path batch files.
//!
//! CSV: one `#` comment line with units, then `path_id,product,time,price` rows; products are
//! 1-based.
//!
//! Binary (all little-endian):
//!
//! | field        | type                       |
//! |--------------|----------------------------|
//! | magic        | 8 bytes `IDSIMPTH`         |
//! | version      | u32, currently 1           |
//! | M            | u32                        |
//! | grid length  | u32 (`G`)                  |
//! | path count   | u64 (`N`)                  |
//! | f0           | `M` × f64                  |
//! | grid times   | `G` × f64                  |
//! | paths        | `N` × `M` × `G` × f64, product-major within a path |

use std::io::{BufRead, Read, Write};

use super::path::GridPath;
use crate::error::{Error, Result};

pub const PATH_MAGIC: &[u8; 8] = b"IDSIMPTH";
pub const PATH_VERSION: u32 = 1;
pub const CSV_UNITS: &str = "# units: time=hours since 15:00 on D-1, price=EUR/MWh";

pub struct PathCsvWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> PathCsvWriter<W> {
    pub fn new(mut out: W) -> Result<Self> {
        writeln!(out, "{CSV_UNITS}")?;
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(["path_id", "product", "time", "price"])?;
        Ok(Self { inner })
    }

    pub fn write_path(&mut self, path_id: u64, path: &GridPath) -> Result<()> {
        for m in 0..path.n_products() {
            let product = (m + 1).to_string();
            for (k, t) in path.grid_times.iter().enumerate() {
                self.inner.write_record([
                    path_id.to_string(),
                    product.clone(),
                    t.to_string(),
                    path.price(m, k).to_string(),
                ])?;
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        self.inner
            .into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}

pub struct PathBinaryWriter<W: Write> {
    out: W,
    n_products: usize,
    grid_times: Vec<f64>,
    declared: u64,
    written: u64,
}

impl<W: Write> PathBinaryWriter<W> {
    pub fn new(mut out: W, f0: &[f64], grid_times: &[f64], n_paths: u64) -> Result<Self> {
        out.write_all(PATH_MAGIC)?;
        out.write_all(&PATH_VERSION.to_le_bytes())?;
        out.write_all(&u32_len(f0.len())?.to_le_bytes())?;
        out.write_all(&u32_len(grid_times.len())?.to_le_bytes())?;
        out.write_all(&n_paths.to_le_bytes())?;
        write_f64s(&mut out, f0)?;
        write_f64s(&mut out, grid_times)?;
        Ok(Self {
            out,
            n_products: f0.len(),
            grid_times: grid_times.to_vec(),
            declared: n_paths,
            written: 0,
        })
    }

    pub fn write_path(&mut self, path: &GridPath) -> Result<()> {
        if path.n_products() != self.n_products || path.grid_times != self.grid_times {
            return Err(Error::InvalidArgument("path does not match the file header".into()));
        }
        if self.written == self.declared {
            return Err(Error::InvalidArgument(format!("more than {} paths written", self.declared)));
        }
        write_f64s(&mut self.out, path.prices())?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        if self.written != self.declared {
            return Err(Error::InvalidArgument(format!(
                "{} paths written, header declares {}",
                self.written, self.declared
            )));
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

fn u32_len(n: usize) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::InvalidArgument(format!("dimension {n} exceeds u32")))
}

fn write_f64s<W: Write>(out: &mut W, xs: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(xs.len() * 8);
    for x in xs {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

/// Contents of a path batch file.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    pub f0: Vec<f64>,
    pub grid_times: Vec<f64>,
    pub paths: Vec<GridPath>,
}

fn read_exact<R: Read>(input: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    input
        .read_exact(buf)
        .map_err(|e| Error::Format(format!("truncated path file while reading {what}: {e}")))
}

fn read_u32<R: Read>(input: &mut R, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(input, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64s<R: Read>(input: &mut R, n: usize, what: &str) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    read_exact(input, &mut buf, what)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

pub fn read_paths_binary<R: Read>(mut input: R) -> Result<PathBatch> {
    let mut magic = [0u8; 8];
    read_exact(&mut input, &mut magic, "magic")?;
    if &magic != PATH_MAGIC {
        return Err(Error::Format("not a path batch file (bad magic)".into()));
    }
    let version = read_u32(&mut input, "version")?;
    if version != PATH_VERSION {
        return Err(Error::Format(format!("unsupported path file version {version}")));
    }
    let m = read_u32(&mut input, "product count")? as usize;
    let g = read_u32(&mut input, "grid length")? as usize;
    let mut nb = [0u8; 8];
    read_exact(&mut input, &mut nb, "path count")?;
    let n = u64::from_le_bytes(nb);
    let f0 = read_f64s(&mut input, m, "f0")?;
    let grid_times = read_f64s(&mut input, g, "grid times")?;
    let mut paths = Vec::new();
    for i in 0..n {
        let prices = read_f64s(&mut input, m * g, &format!("path {i}"))?;
        paths.push(GridPath::from_prices(grid_times.clone(), m, prices)?);
    }
    Ok(PathBatch { f0, grid_times, paths })
}

/// Reads a CSV batch. Rows must be grouped by path and product in grid order, as written by
/// [`PathCsvWriter`].
pub fn read_paths_csv<R: BufRead>(input: R) -> Result<PathBatch> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(input);
    let mut rows: Vec<(u64, usize, f64, f64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| rec.get(i).unwrap_or("").trim().to_string();
        let bad = |what: &str| Error::Format(format!("line {line}: invalid {what}"));
        let id: u64 = field(0).parse().map_err(|_| bad("path_id"))?;
        let product: usize = field(1).parse().map_err(|_| bad("product"))?;
        let t: f64 = field(2).parse().map_err(|_| bad("time"))?;
        let price: f64 = field(3).parse().map_err(|_| bad("price"))?;
        if product == 0 {
            return Err(bad("product (1-based)"));
        }
        rows.push((id, product - 1, t, price));
    }
    let mut paths = Vec::new();
    let mut grid_times: Vec<f64> = Vec::new();
    let mut n_products = 0;
    let mut start = 0;
    while start < rows.len() {
        let id = rows[start].0;
        let end = start + rows[start..].iter().take_while(|r| r.0 == id).count();
        let block = &rows[start..end];
        let m = block.iter().map(|r| r.1).max().unwrap_or(0) + 1;
        let times: Vec<f64> = block.iter().filter(|r| r.1 == 0).map(|r| r.2).collect();
        if paths.is_empty() {
            grid_times = times.clone();
            n_products = m;
        }
        if m != n_products || times != grid_times || block.len() != m * grid_times.len() {
            return Err(Error::Format(format!("path {id} does not match the first path's layout")));
        }
        let prices = block.iter().map(|r| r.3).collect();
        paths.push(GridPath::from_prices(grid_times.clone(), m, prices)?);
        start = end;
    }
    let f0 = match (paths.first(), grid_times.first()) {
        (Some(p), Some(&t0)) if t0 == 0.0 => (0..n_products).map(|m| p.price(m, 0)).collect(),
        _ => Vec::new(),
    };
    Ok(PathBatch { f0, grid_times, paths })
}
