//! Run records and their on-disk layout: `runs/<hash>/record.json`, one CSV
//! per table, and `meta.json` for wall-clock data.
//!
//! `record.json` holds no timestamps so that identical configurations give
//! identical bytes.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::{Command, ExperimentConfig};

pub const SCHEMA: u32 = 1;
pub const ARTIFACT: &str = "paneitz-lab";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema: u32,
    pub artifact: String,
    pub version: String,
    pub config_hash: String,
    pub command: Command,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub payload: serde_json::Value,
}

impl RunRecord {
    pub fn new(config: &ExperimentConfig, payload: serde_json::Value) -> Self {
        Self {
            schema: SCHEMA,
            artifact: ARTIFACT.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: config.hash(),
            command: config.command,
            seed: config.seed,
            config: config.clone(),
            payload,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("record serializes");
        bytes.push(b'\n');
        bytes
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let record: Self =
            serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))?;
        anyhow::ensure!(
            record.schema == SCHEMA,
            "{}: unsupported schema {}",
            path.display(),
            record.schema
        );
        Ok(record)
    }
}

/// Wall-clock data kept apart from the deterministic record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub schema: u32,
    pub config_hash: String,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub elapsed_seconds: f64,
}

pub fn unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // 17 significant digits round-trip every f64
            Self::Num(x) => format!("{x:.16e}"),
            Self::Int(i) => i.to_string(),
            Self::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Self::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Self::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Self::Int(x as i64)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Self::Int(i64::from(x))
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Self::Text(x.to_string())
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Self::Text(x.into())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Self::Text(x)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map(Into::into).unwrap_or(Self::Text(String::new()))
    }
}

/// A named table written as `<name>.csv` with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}.csv", self.name));
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(path)
    }
}

pub fn run_dir(root: &Path, hash: &str) -> PathBuf {
    root.join("runs").join(hash)
}

/// Write the record, its tables and the metadata; returns the run directory.
pub fn persist(root: &Path, record: &RunRecord, tables: &[Table], started: u128, elapsed: f64) -> Result<PathBuf> {
    let dir = run_dir(root, &record.config_hash);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("record.json"), record.to_bytes())
        .with_context(|| format!("writing {}", dir.join("record.json").display()))?;
    for t in tables {
        t.write(&dir)?;
    }
    let meta = RunMeta {
        schema: SCHEMA,
        config_hash: record.config_hash.clone(),
        started_unix_ms: started,
        finished_unix_ms: unix_ms(),
        elapsed_seconds: elapsed,
    };
    let mut bytes = serde_json::to_vec_pretty(&meta)?;
    bytes.push(b'\n');
    fs::write(dir.join("meta.json"), bytes)?;
    Ok(dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_seventeen_digits() {
        let x = 0.1f64 + 0.2;
        let s = Cell::Num(x).render();
        assert_eq!(s.parse::<f64>().unwrap(), x);
        let mantissa = s.split('e').next().unwrap().replace(['.', '-'], "");
        assert_eq!(mantissa.len(), 17);
        assert_eq!(Cell::from(None::<f64>).render(), "");
    }

    #[test]
    fn tables_are_rfc4180() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("t", &["label", "x"]);
        t.push(vec!["a, \"quoted\"".into(), 1.5.into()]);
        let path = t.write(dir.path()).unwrap();
        let mut r = csv::Reader::from_path(path).unwrap();
        let row = r.records().next().unwrap().unwrap();
        assert_eq!(&row[0], "a, \"quoted\"");
        assert_eq!(row[1].parse::<f64>().unwrap(), 1.5);
    }
}
