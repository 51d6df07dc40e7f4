use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Creates `dir` if needed. A missing parent is a configuration error.
pub fn prepare_out_dir(dir: &Path) -> Result<PathBuf, CliError> {
    if dir.is_dir() {
        return Ok(dir.to_path_buf());
    }
    if dir.exists() {
        return Err(CliError::config(format!("--out {} exists and is not a directory", dir.display())));
    }
    let parent = dir.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    if !parent.is_dir() {
        return Err(CliError::config(format!("--out: parent directory {} does not exist", parent.display())));
    }
    std::fs::create_dir(dir).map_err(|e| CliError::config(format!("--out {}: {e}", dir.display())))?;
    Ok(dir.to_path_buf())
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::data(format!("--data {}: {e}", path.display())))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

pub fn timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub struct Manifest<'a> {
    pub command: &'a str,
    pub config: Value,
    pub seeds: &'a [u64],
    pub input: Option<&'a Path>,
    pub started: DateTime<Utc>,
}

impl Manifest<'_> {
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let input = match self.input {
            Some(p) => json!({ "path": p.display().to_string(), "sha256": sha256_file(p)? }),
            None => Value::Null,
        };
        let manifest = json!({
            "tool": "hetbo",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config": self.config,
            "seeds": self.seeds,
            "input": input,
            "started_at": timestamp(self.started),
            "finished_at": timestamp(Utc::now()),
        });
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::runtime(e.to_string()))?;
        write_text(&dir.join(MANIFEST_FILE), &(text + "\n"))
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

/// CSV writer that refuses non-finite numbers.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Result<Self, CliError> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header.iter().map(AsRef::as_ref)).map_err(csv_error)?;
        Ok(Self { writer })
    }

    /// `text` cells first, then numbers.
    pub fn row(&mut self, text: &[&str], numbers: &[f64]) -> Result<(), CliError> {
        if let Some(v) = numbers.iter().find(|v| !v.is_finite()) {
            return Err(CliError::runtime(format!("non-finite value {v} in output row")));
        }
        let cells = text.iter().map(|s| s.to_string()).chain(numbers.iter().map(|v| v.to_string()));
        self.writer.write_record(cells).map_err(csv_error)
    }

    pub fn save(self, path: &Path) -> Result<(), CliError> {
        let bytes = self.writer.into_inner().map_err(|e| CliError::runtime(e.to_string()))?;
        std::fs::write(path, bytes).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
    }
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::runtime(e.to_string())
}

/// Mean and standard error (sample std / √n; zero for one value).
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
