//! Run directories: config snapshot, result files and a manifest of hashes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::json;

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config_hash: String,
    files: &'a [ManifestEntry],
}

pub struct RunDir {
    path: PathBuf,
    command: &'static str,
    hash: String,
    files: Vec<ManifestEntry>,
}

/// Rows of already formatted cells.
pub type Rows = Vec<Vec<String>>;

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl RunDir {
    /// Creates the directory and writes `config.json`.
    pub fn create(cfg: &ExperimentConfig) -> CliResult<Self> {
        let path = cfg.run_dir();
        fs::create_dir_all(&path).map_err(|e| CliError::io(&path, e))?;
        let mut dir = Self { path, command: cfg.command.name(), hash: cfg.hash(), files: Vec::new() };
        dir.write("config.json", cfg.snapshot().as_bytes())?;
        Ok(dir)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let target = self.path.join(name);
        fs::write(&target, bytes).map_err(|e| CliError::io(&target, e))?;
        self.files.push(ManifestEntry {
            name: name.to_string(),
            bytes: bytes.len(),
            sha256: hex(&Sha256::digest(bytes)),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> CliResult<()> {
        self.write(name, json::to_string(value).as_bytes())
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &Rows) -> CliResult<()> {
        let bytes = csv_bytes(header, rows)?;
        self.write(name, &bytes)
    }

    /// Writes `manifest.json` and returns the directory.
    pub fn finish(self) -> CliResult<PathBuf> {
        let manifest = Manifest {
            tool: "ptlab",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            config_hash: self.hash.clone(),
            files: &self.files,
        };
        let target = self.path.join("manifest.json");
        fs::write(&target, json::to_string(&manifest)).map_err(|e| CliError::io(&target, e))?;
        Ok(self.path)
    }
}

/// Comma-separated, LF-terminated, header first.
pub fn csv_bytes(header: &[&str], rows: &Rows) -> CliResult<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Solver(format!("csv encoding: {e}"));
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(row).map_err(fail)?;
    }
    w.into_inner().map_err(|e| CliError::Solver(format!("csv encoding: {e}")))
}
