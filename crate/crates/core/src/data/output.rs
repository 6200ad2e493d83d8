//! Plot-ready CSV tables, run manifests and timing files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{sha256_file, write_atomic, DataError};

/// 17 significant digits; parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a CSV table atomically.
pub fn write_csv<S: AsRef<str>>(path: &Path, header: &[S], rows: &[Vec<String>]) -> Result<(), DataError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let csv_err = |e: csv::Error| DataError::Csv(e.to_string());
    w.write_record(header.iter().map(|h| h.as_ref())).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| DataError::Csv(e.to_string()))?;
    write_atomic(path, &bytes)
}

/// Square similarity table: a header of ids, then one row per id.
pub fn similarity_rows(ids: &[String], values: &crate::num::Matrix) -> (Vec<String>, Vec<Vec<String>>) {
    let header = std::iter::once("id".to_string()).chain(ids.iter().cloned()).collect();
    let rows = ids
        .iter()
        .enumerate()
        .map(|(i, id)| std::iter::once(id.clone()).chain(values.row(i).iter().map(|&v| fmt_f64(v))).collect())
        .collect();
    (header, rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to reproduce a run. Contains no wall-clock values, so
/// identical inputs give an identical manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub subcommand: String,
    pub config: serde_json::Value,
    pub dataset_hash: String,
    pub seed: u64,
    pub objective: String,
    pub notes: Vec<String>,
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: serde_json::Value, dataset_hash: &str, seed: u64, objective: &str) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").into(),
            subcommand: subcommand.into(),
            config,
            dataset_hash: dataset_hash.into(),
            seed,
            objective: objective.into(),
            notes: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Records the hashes of files in `dir`, by name.
    pub fn add_outputs(&mut self, dir: &Path, names: &[String]) -> Result<(), DataError> {
        for n in names {
            self.outputs.push(OutputFile {
                path: n.clone(),
                sha256: sha256_file(&dir.join(n))?,
            });
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<(), DataError> {
        write_json(path, self)
    }
}

/// Wall-clock seconds per phase, kept apart from the manifest.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub phases: Vec<(String, f64)>,
    pub per_cycle: Vec<f64>,
}

impl Timings {
    pub fn record(&mut self, phase: &str, seconds: f64) {
        self.phases.push((phase.into(), seconds));
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), DataError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| DataError::Io(e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}
