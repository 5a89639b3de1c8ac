use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::failure::{CliResult, Context};

#[derive(Debug, Serialize)]
pub struct InputFile {
    pub path: PathBuf,
    pub sha256: String,
}

/// Provenance record written next to every output.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub inputs: Vec<InputFile>,
    /// SHA-256 of the model parameter file, when there is one.
    pub params_sha256: Option<String>,
    pub seed: Option<u64>,
    pub version: String,
    pub wall_clock_s: f64,
    pub threads: usize,
    pub outputs: Vec<PathBuf>,
    /// Settings that shape the outputs besides the input files.
    pub settings: serde_json::Value,
    #[serde(skip)]
    started: Option<Instant>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn hash_file(path: &Path) -> CliResult<String> {
    Ok(sha256_hex(&std::fs::read(path).at(path)?))
}

impl RunManifest {
    pub fn start(subcommand: &str) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            inputs: Vec::new(),
            params_sha256: None,
            seed: None,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_s: 0.0,
            threads: rayon::current_num_threads(),
            outputs: Vec::new(),
            settings: serde_json::Value::Null,
            started: Some(Instant::now()),
        }
    }

    pub fn input(&mut self, path: &Path) -> CliResult<&mut Self> {
        let sha256 = hash_file(path)?;
        self.inputs.push(InputFile {
            path: path.to_path_buf(),
            sha256,
        });
        Ok(self)
    }

    pub fn params(&mut self, path: &Path) -> CliResult<&mut Self> {
        self.input(path)?;
        self.params_sha256 = self.inputs.last().map(|i| i.sha256.clone());
        Ok(self)
    }

    pub fn settings(&mut self, settings: impl Serialize) -> &mut Self {
        self.settings = serde_json::to_value(settings).unwrap_or(serde_json::Value::Null);
        self
    }

    /// Writes the manifest to `path` once all outputs are in place.
    pub fn finish(&mut self, outputs: &[&Path], path: &Path) -> CliResult<()> {
        self.outputs = outputs.iter().map(|p| p.to_path_buf()).collect();
        self.wall_clock_s = self.started.map_or(0.0, |t| t.elapsed().as_secs_f64());
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n").at(path)
    }
}

/// `out.csv` → `out.csv.manifest.json`.
pub fn sidecar(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}
