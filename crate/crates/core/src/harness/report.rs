use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

use super::{Check, ExperimentConfig};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    /// One value per report column; empty when the trial failed.
    pub values: Vec<f64>,
    pub error: Option<String>,
}

impl TrialRecord {
    pub fn value(&self, columns: &[String], name: &str) -> Option<f64> {
        let i = columns.iter().position(|c| c == name)?;
        self.values.get(i).copied()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub toolkit_version: String,
    pub config: ExperimentConfig,
    pub columns: Vec<String>,
    pub records: Vec<TrialRecord>,
    pub aggregates: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub wall_clock_secs: f64,
}

impl Report {
    pub fn column(&self, name: &str) -> Vec<f64> {
        self.records
            .iter()
            .filter_map(|r| r.value(&self.columns, name))
            .collect()
    }
}

/// Writes one row per trial: `trial,status,<columns…>,error`. Numbers use the
/// shortest decimal form that round-trips.
pub fn emit_csv(report: &Report, path: &Path) -> Result<()> {
    let io_err = |e: csv::Error| Error::Io {
        path: path.to_path_buf(),
        source: e.into(),
    };
    let mut writer = csv::Writer::from_path(path).map_err(io_err)?;
    let mut header = vec!["trial".to_string(), "status".to_string()];
    header.extend(report.columns.iter().cloned());
    header.push("error".to_string());
    writer.write_record(&header).map_err(io_err)?;
    for r in &report.records {
        let mut row = vec![
            r.trial.to_string(),
            if r.error.is_some() { "error" } else { "ok" }.to_string(),
        ];
        if r.error.is_some() {
            row.extend(report.columns.iter().map(|_| String::new()));
        } else {
            row.extend(r.values.iter().map(|v| v.to_string()));
        }
        row.push(r.error.clone().unwrap_or_default());
        writer.write_record(&row).map_err(io_err)?;
    }
    writer.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
