use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{Command, RunConfig};
use super::CliError;

/// Shortest representation that parses back to the same value.
pub fn fmt_f64(v: f64) -> String {
    v.to_string()
}

/// Accumulates CSV rows in memory and writes them in one go.
pub struct CsvTable {
    name: &'static str,
    writer: csv::Writer<Vec<u8>>,
}

impl CsvTable {
    pub fn new(name: &'static str, header: &[&str]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("writing to memory cannot fail");
        Self { name, writer }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("writing to memory cannot fail");
    }

    pub fn save(self, dir: &Path) -> Result<String, CliError> {
        let bytes = self.writer.into_inner().map_err(|e| CliError::io(e.to_string()))?;
        write_file(dir, self.name, &bytes)?;
        Ok(self.name.to_string())
    }
}

pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(e.to_string()))?;
    text.push('\n');
    write_file(dir, name, text.as_bytes())?;
    Ok(name.to_string())
}

/// One estimator run inside a command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub tau: f64,
    pub method: String,
    pub seed: u64,
    pub status: String,
    pub runtime_secs: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub diagnostics: BTreeMap<String, f64>,
}

/// Everything needed to reproduce a run, plus what it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub config: RunConfig,
    pub output_dir: PathBuf,
    pub outputs: Vec<String>,
    pub runs: Vec<RunRecord>,
    pub failures: usize,
    pub runtime_secs: f64,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl Manifest {
    pub fn new(command: Command, config: RunConfig, output_dir: PathBuf) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command,
            config,
            output_dir,
            outputs: Vec::new(),
            runs: Vec::new(),
            failures: 0,
            runtime_secs: 0.0,
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("malformed manifest: {e}")))
    }
}
