//! Result records and their files: one JSON record per run plus one CSV per
//! nonempty table.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::Serialize;

use crate::config::{ExperimentConfig, ExperimentKind};

pub const SCHEMA_VERSION: u32 = 1;
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Inconclusive => 2,
        }
    }

    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

/// A per-sample series, written as CSV. Cells are preformatted so that the
/// bytes on disk depend only on the values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| (*c).into()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Round-trip formatting; exponent notation outside `[1e-4, 1e15)`.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn flag(b: bool) -> String {
    b.to_string()
}

#[derive(Debug, Clone, Serialize)]
pub struct ResultRecord {
    pub schema_version: u32,
    pub artifact_version: String,
    pub experiment: ExperimentKind,
    pub status: Status,
    pub diagnostics: Vec<String>,
    /// Flat metrics; non-finite values serialize as `null`.
    pub metrics: BTreeMap<String, f64>,
    pub config: ExperimentConfig,
    pub reports: serde_json::Value,
    pub tables: Vec<Table>,
    pub wall_time_seconds: f64,
}

impl ResultRecord {
    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).copied()
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

static WRITE_LOCK: Mutex<()> = Mutex::new(());

/// Writes `<experiment>.json` and `<experiment>_<table>.csv` for every table
/// with rows into `dir`, creating it if needed. Returns the written paths.
pub fn write_results(record: &ResultRecord, dir: &Path) -> io::Result<Vec<PathBuf>> {
    let _guard = WRITE_LOCK.lock().unwrap_or_else(|e| e.into_inner());
    fs::create_dir_all(dir)?;
    let stem = record.experiment.name();
    let mut paths = Vec::new();
    let json = dir.join(format!("{stem}.json"));
    let mut text = serde_json::to_string_pretty(record)?;
    text.push('\n');
    fs::write(&json, text)?;
    paths.push(json);
    for t in record.tables.iter().filter(|t| !t.rows.is_empty()) {
        let path = dir.join(format!("{stem}_{}.csv", t.name));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&t.columns)?;
        for row in &t.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for v in [0.0, 1.0, -0.5, 1e-10, 123456.789, 1e300, f64::MIN_POSITIVE, 0.1 + 0.2] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(1e-10), "1e-10");
        assert_eq!(num(0.25), "0.25");
        assert_eq!(num(f64::INFINITY), "inf");
    }
}
