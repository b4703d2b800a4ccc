//! CSV series, JSON summaries and the run manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("series `{name}`: row {row} has {got} values, expected {expected}")]
    Ragged { name: String, row: usize, got: usize, expected: usize },
    #[error("series `{name}`: non-finite value {value} in column `{column}`, row {row}")]
    NonFinite { name: String, column: String, row: usize, value: f64 },
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io { path: path.to_path_buf(), source }
}

/// A named table of numeric columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: vec![] }
    }

    /// Builds a series from equal-length columns.
    pub fn from_columns(name: &str, columns: &[(&str, &[f64])]) -> Self {
        let n = columns.first().map_or(0, |c| c.1.len());
        let mut s = Self::new(name, &columns.iter().map(|c| c.0).collect::<Vec<_>>());
        s.rows = (0..n).map(|i| columns.iter().map(|c| c.1.get(i).copied().unwrap_or(f64::NAN)).collect()).collect();
        s
    }

    pub fn validate(&self) -> Result<(), OutputError> {
        for (r, row) in self.rows.iter().enumerate() {
            if row.len() != self.columns.len() {
                return Err(OutputError::Ragged { name: self.name.clone(), row: r, got: row.len(), expected: self.columns.len() });
            }
            if let Some((c, v)) = row.iter().enumerate().find(|(_, v)| !v.is_finite()) {
                return Err(OutputError::NonFinite {
                    name: self.name.clone(),
                    column: self.columns[c].clone(),
                    row: r,
                    value: *v,
                });
            }
        }
        Ok(())
    }

    /// CSV text: header row, comma separated, LF endings. Floats use the
    /// shortest decimal form that parses back to the same value.
    pub fn to_csv(&self) -> Result<Vec<u8>, OutputError> {
        self.validate()?;
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
        let to_io = |e: csv::Error| std::io::Error::other(e.to_string());
        let here = Path::new(&self.name);
        w.write_record(&self.columns).map_err(to_io).map_err(io(here))?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string())).map_err(to_io).map_err(io(here))?;
        }
        w.into_inner().map_err(|e| std::io::Error::other(e.to_string())).map_err(io(here))
    }
}

/// Parses CSV text written by [`Series::to_csv`].
pub fn parse_csv(name: &str, text: &[u8]) -> Result<Series, String> {
    let mut r = csv::ReaderBuilder::new().from_reader(text);
    let columns: Vec<String> = r.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
    let mut rows = vec![];
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        rows.push(rec.iter().map(|f| f.parse::<f64>().map_err(|e| format!("{f}: {e}"))).collect::<Result<_, _>>()?);
    }
    Ok(Series { name: name.into(), columns, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub message: String,
    pub exit_code: i32,
}

/// Provenance of one run. Written even when the run fails.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub arguments: Vec<String>,
    pub seed: Option<u64>,
    pub started: String,
    pub finished: String,
    pub config: Option<serde_json::Value>,
    pub outputs: Vec<OutputRecord>,
    pub error: Option<ErrorRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn timestamp() -> String {
    time::OffsetDateTime::now_utc()
        .format(&time::format_description::well_known::Rfc3339)
        .unwrap_or_else(|_| "unknown".into())
}

/// Writes files into one output directory and records their checksums.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    records: Vec<OutputRecord>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, OutputError> {
        std::fs::create_dir_all(root).map_err(io(root))?;
        Ok(Self { root: root.to_path_buf(), records: vec![] })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, file: &str, bytes: &[u8]) -> Result<PathBuf, OutputError> {
        let path = self.root.join(file);
        std::fs::write(&path, bytes).map_err(io(&path))?;
        self.records.retain(|r| r.file != file);
        self.records.push(OutputRecord { file: file.into(), bytes: bytes.len() as u64, sha256: sha256_hex(bytes) });
        Ok(path)
    }

    pub fn write_series(&mut self, series: &Series) -> Result<PathBuf, OutputError> {
        let bytes = series.to_csv()?;
        self.write(&format!("{}.csv", series.name), &bytes)
    }

    pub fn write_json(&mut self, file: &str, value: &impl Serialize) -> Result<PathBuf, OutputError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| std::io::Error::other(e.to_string())).map_err(io(Path::new(file)))?;
        text.push('\n');
        self.write(file, text.as_bytes())
    }

    pub fn records(&self) -> &[OutputRecord] {
        &self.records
    }

    /// Writes `manifest.json`, which is not itself listed among the outputs.
    pub fn write_manifest(&self, manifest: &RunManifest) -> Result<PathBuf, OutputError> {
        let path = self.root.join("manifest.json");
        let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(io(&path))?;
        Ok(path)
    }
}
