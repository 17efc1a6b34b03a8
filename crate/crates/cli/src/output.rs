//! Artifact emission. All files go through one [`ArtifactWriter`], which
//! records each path with the sha256 of its bytes for the run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{hex, Formats, RunConfig};
use crate::CliError;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub command: String,
    pub timestamp: String,
    pub input_hash: String,
    pub config_echo: serde_json::Value,
    pub outputs: Vec<OutputRecord>,
}

pub struct ArtifactWriter {
    dir: PathBuf,
    formats: Formats,
    records: Vec<OutputRecord>,
}

impl ArtifactWriter {
    pub fn create(dir: &Path, formats: Formats) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), formats, records: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn records(&self) -> &[OutputRecord] {
        &self.records
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        if self.records.iter().any(|r| r.path == name) {
            return Err(CliError::Io(std::io::Error::other(format!("{name} written twice in one run"))));
        }
        std::fs::write(self.dir.join(name), bytes)?;
        self.records.push(OutputRecord { path: name.to_string(), sha256: hex(&Sha256::digest(bytes)) });
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<Cell>]) -> Result<(), CliError> {
        if self.formats.csv {
            self.write(name, emit_csv(header, rows).as_bytes())?;
        }
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        if self.formats.json {
            let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.into()))?;
            text.push('\n');
            self.write(name, text.as_bytes())?;
        }
        Ok(())
    }

    /// The closure only runs when SVG output is enabled.
    pub fn svg(&mut self, name: &str, render: impl FnOnce() -> String) -> Result<(), CliError> {
        if self.formats.svg {
            self.write(name, render().as_bytes())?;
        }
        Ok(())
    }

    /// Writes `manifest.json` listing every file emitted so far.
    pub fn finish(self, command: &str, config: &RunConfig) -> Result<Vec<OutputRecord>, CliError> {
        let manifest = RunManifest {
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            timestamp: timestamp(),
            input_hash: config.input_hash(),
            config_echo: config.echo_json(),
            outputs: self.records.clone(),
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.into()))?;
        text.push('\n');
        std::fs::write(self.dir.join(MANIFEST_NAME), text)?;
        Ok(self.records)
    }
}

/// RFC 3339 UTC time, pinned by `SOURCE_DATE_EPOCH` when set.
fn timestamp() -> String {
    let pinned = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|s| chrono::DateTime::from_timestamp(s, 0));
    pinned.unwrap_or_else(chrono::Utc::now).to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// One CSV field.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn format_number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// UTF-8, comma separated, LF line endings, one header row.
pub fn emit_csv(header: &[&str], rows: &[Vec<Cell>]) -> String {
    let mut out = String::with_capacity(32 * rows.len() * header.len().max(1));
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        for (k, cell) in row.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            match cell {
                Cell::Num(x) => out.push_str(&format_number(*x)),
                Cell::Text(s) if s.contains([',', '"', '\n']) => {
                    let _ = write!(out, "\"{}\"", s.replace('"', "\"\""));
                }
                Cell::Text(s) => out.push_str(s),
                Cell::Empty => {}
            }
        }
        out.push('\n');
    }
    out
}

/// Rows of a `t1_ns,t2_ns,density` grid file, row-major in t₁.
pub fn grid_rows(t_ns: &[f64], density: impl Fn(usize, usize) -> f64) -> Vec<Vec<Cell>> {
    let mut rows = Vec::with_capacity(t_ns.len() * t_ns.len());
    for (i, &t1) in t_ns.iter().enumerate() {
        for (j, &t2) in t_ns.iter().enumerate() {
            rows.push(vec![Cell::Num(t1), Cell::Num(t2), Cell::Num(density(i, j))]);
        }
    }
    rows
}

/// Inverse of the grid emission: `(t1_ns, t2_ns, density)` triples.
pub fn parse_grid_csv(text: &str) -> Result<Vec<(f64, f64, f64)>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some("t1_ns,t2_ns,density") => {}
        other => return Err(format!("unexpected header {other:?}")),
    }
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                return Err(format!("expected 3 fields in `{line}`"));
            }
            let p = |s: &str| s.parse::<f64>().map_err(|e| format!("`{s}`: {e}"));
            Ok((p(f[0])?, p(f[1])?, p(f[2])?))
        })
        .collect()
}
