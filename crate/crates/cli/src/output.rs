//! Artifact writers: the diagnostics CSV, `summary.json` and snapshots.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use randnls::diagnostics::CSV_HEADER;
use randnls::ensemble::{FieldDoc, ModeEnsembleDoc};
use randnls::{DiagnosticsRecord, Ensemble, ModeEnsemble, MonteCarloEnsemble, Termination};
use serde::Serialize;
use serde_json::Value;

use crate::config::Experiment;
use crate::CliError;

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SNAPSHOT_DIR: &str = "snapshots";

/// Row-at-a-time writer for `diagnostics.csv`.
pub struct DiagnosticsWriter {
    out: BufWriter<File>,
    error: Option<std::io::Error>,
}

impl DiagnosticsWriter {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        let mut out = BufWriter::new(File::create(dir.join(DIAGNOSTICS_FILE))?);
        writeln!(out, "{CSV_HEADER}")?;
        Ok(Self { out, error: None })
    }

    /// Appends a row. The first I/O error is kept and reported by [`finish`](Self::finish).
    pub fn push(&mut self, record: &DiagnosticsRecord) {
        if self.error.is_none() {
            if let Err(e) = writeln!(self.out, "{}", record.to_csv_row()) {
                self.error = Some(e);
            }
        }
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        if let Some(e) = self.error.take() {
            return Err(e.into());
        }
        self.out.flush()?;
        Ok(())
    }
}

/// Writes a whole record list, for experiments that only produce records at the end.
pub fn write_diagnostics(dir: &Path, records: &[DiagnosticsRecord]) -> Result<(), CliError> {
    let mut w = DiagnosticsWriter::create(dir)?;
    for r in records {
        w.push(r);
    }
    w.finish()
}

/// States that can be written in the mode-ensemble snapshot format.
pub trait Snapshot {
    fn snapshot_doc(&self) -> ModeEnsembleDoc;
}

impl Snapshot for ModeEnsemble {
    fn snapshot_doc(&self) -> ModeEnsembleDoc {
        ModeEnsembleDoc::from(self)
    }
}

/// Realizations become equally weighted modes, which has the same density.
impl Snapshot for MonteCarloEnsemble {
    fn snapshot_doc(&self) -> ModeEnsembleDoc {
        let j = self.len() as f64;
        ModeEnsembleDoc {
            grid: self.grid().spec(),
            weights: vec![1.0 / j; self.len()],
            modes: self.realizations().iter().map(FieldDoc::from_field).collect(),
        }
    }
}

pub fn write_snapshots<S: Snapshot>(dir: &Path, times: &[f64], states: &[S]) -> Result<Vec<PathBuf>, CliError> {
    let sub = dir.join(SNAPSHOT_DIR);
    std::fs::create_dir_all(&sub)?;
    let mut paths = Vec::with_capacity(states.len());
    for (i, (t, s)) in times.iter().zip(states).enumerate() {
        let path = sub.join(format!("snapshot_{i:05}.json"));
        let doc = serde_json::json!({ "t": t, "ensemble": s.snapshot_doc() });
        std::fs::write(&path, serde_json::to_string(&doc).map_err(std::io::Error::other)?)?;
        paths.push(path);
    }
    Ok(paths)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    ConfigError,
    NumericalFailure,
    IoError,
}

/// Contents of `summary.json`. Written for every run, including failed ones.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub experiment: Option<Experiment>,
    pub status: Status,
    pub exit_code: i32,
    pub error: Option<String>,
    pub termination: Option<Termination>,
    pub steps: Option<usize>,
    pub final_time: Option<f64>,
    pub drifts: BTreeMap<String, f64>,
    pub slopes: BTreeMap<String, f64>,
    /// The experiment's invariant bundle.
    pub invariants: BTreeMap<String, bool>,
    pub passed: bool,
    pub details: BTreeMap<String, Value>,
}

impl Summary {
    pub fn new(experiment: Option<Experiment>) -> Self {
        Self {
            experiment,
            status: Status::Ok,
            exit_code: 0,
            error: None,
            termination: None,
            steps: None,
            final_time: None,
            drifts: BTreeMap::new(),
            slopes: BTreeMap::new(),
            invariants: BTreeMap::new(),
            passed: false,
            details: BTreeMap::new(),
        }
    }

    pub fn invariant(&mut self, name: &str, holds: bool) {
        self.invariants.insert(name.to_string(), holds);
    }

    pub fn drift(&mut self, name: &str, value: f64) {
        self.drifts.insert(name.to_string(), value);
    }

    pub fn slope(&mut self, name: &str, value: f64) {
        self.slopes.insert(name.to_string(), value);
    }

    pub fn detail(&mut self, name: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.details.insert(name.to_string(), v);
    }

    pub fn fail(&mut self, error: &CliError) {
        self.status = match error {
            CliError::Config(_) => Status::ConfigError,
            CliError::Numerical(_) => Status::NumericalFailure,
            CliError::Io(_) => Status::IoError,
        };
        self.exit_code = error.exit_code();
        self.error = Some(error.to_string());
    }

    pub fn finalize(&mut self) {
        self.passed = self.status == Status::Ok && self.invariants.values().all(|&v| v);
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        write_json(&dir.join(SUMMARY_FILE), self)
    }
}

/// Largest relative deviation of `f(record)` from its initial value.
pub fn relative_drift(records: &[DiagnosticsRecord], f: impl Fn(&DiagnosticsRecord) -> f64) -> f64 {
    let Some(first) = records.first() else {
        return 0.0;
    };
    let v0 = f(first);
    let scale = v0.abs().max(f64::MIN_POSITIVE);
    records.iter().map(|r| (f(r) - v0).abs() / scale).fold(0.0, f64::max)
}
