//! Run outputs: `folds.csv` (one row per successful fold),
//! `failures.csv`, a human-readable `summary.txt` and `manifest.json`.
//! Nothing written depends on the clock or on the worker count.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufReader, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Metric};
use revembed_core::eval::{summarize, FoldError, FoldResult, MetricSummary};

pub const FOLDS_FILE: &str = "folds.csv";
pub const FAILURES_FILE: &str = "failures.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("manifest: {0}")]
    Json(#[from] serde_json::Error),
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.to_owned(),
        source,
    }
}

/// One line of `folds.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRow {
    pub dataset: String,
    pub method: String,
    pub fold: usize,
    pub roc_auc: f64,
    pub accuracy: f64,
    pub f1: f64,
}

impl FoldRow {
    pub fn new(dataset: &str, r: &FoldResult) -> Self {
        FoldRow {
            dataset: dataset.to_owned(),
            method: r.method.clone(),
            fold: r.fold,
            roc_auc: r.roc_auc,
            accuracy: r.accuracy,
            f1: r.f1,
        }
    }

    pub fn metric(&self, m: Metric) -> f64 {
        match m {
            Metric::RocAuc => self.roc_auc,
            Metric::Accuracy => self.accuracy,
            Metric::F1 => self.f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRow {
    pub dataset: String,
    pub method: String,
    pub fold: usize,
    pub message: String,
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<(), ReportError> {
    let csv_err = |source| ReportError::Csv {
        path: path.to_owned(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(io_at(path))
}

pub fn read_fold_rows(path: &Path) -> Result<Vec<FoldRow>, ReportError> {
    let csv_err = |source| ReportError::Csv {
        path: path.to_owned(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().collect::<Result<_, _>>().map_err(csv_err)
}

/// SHA-256 of a file, streamed.
pub fn sha256_file(path: &Path) -> Result<(String, u64), ReportError> {
    let mut file = BufReader::new(File::open(path).map_err(io_at(path))?);
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut total = 0u64;
    loop {
        let n = file.read(&mut buf).map_err(io_at(path))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        total += n as u64;
    }
    Ok((hex::encode(hasher.finalize()), total))
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub field: String,
    /// As written in the config.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub documents: usize,
    pub negative: usize,
    pub positive: usize,
    pub folds: usize,
    pub fold_sizes: Vec<usize>,
    pub skipped_rows: usize,
    pub assigned_folds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub core_version: String,
    pub name: String,
    pub family: String,
    pub seed: u64,
    pub config_sha256: String,
    pub config: ExperimentConfig,
    pub inputs: Vec<InputDigest>,
    pub dataset: DatasetInfo,
    pub folds_ok: usize,
    pub folds_failed: usize,
    pub reports: Vec<FileDigest>,
}

/// Per-fold detail shown in the summary next to the metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldLine {
    pub fold: usize,
    pub outcome: Result<FoldResult, FoldError>,
    pub note: String,
}

fn pct(s: &MetricSummary) -> (f64, f64) {
    (100.0 * s.mean, 100.0 * s.std)
}

pub fn render_summary(config: &ExperimentConfig, dataset: &DatasetInfo, lines: &[FoldLine]) -> String {
    let ok: Vec<FoldResult> = lines.iter().filter_map(|l| l.outcome.as_ref().ok().cloned()).collect();
    let failed = lines.len() - ok.len();
    let mut out = String::new();
    let _ = writeln!(out, "run      {}", config.name);
    let _ = writeln!(out, "family   {}", config.pipeline.family());
    let _ = writeln!(
        out,
        "dataset  {} ({} documents, {} negative, {} positive, {} folds)",
        dataset.name, dataset.documents, dataset.negative, dataset.positive, dataset.folds
    );
    let _ = writeln!(out, "seed     {}", config.seed);
    let _ = writeln!(out, "folds    {} ok, {failed} failed", ok.len());
    out.push('\n');
    if let Ok(s) = summarize(&ok) {
        let _ = writeln!(out, "{:<10} {:>9} {:>8}", "metric", "mean (%)", "std (%)");
        for m in &config.metrics {
            let stat = match m {
                Metric::RocAuc => &s.roc_auc,
                Metric::Accuracy => &s.accuracy,
                Metric::F1 => &s.f1,
            };
            let (mean, std) = pct(stat);
            let _ = writeln!(out, "{:<10} {mean:>9.2} {std:>8.2}", m.as_str());
        }
        out.push('\n');
    }
    let _ = write!(out, "{:<5}", "fold");
    for m in &config.metrics {
        let _ = write!(out, " {:>9}", m.as_str());
    }
    out.push_str("  fit\n");
    for line in lines {
        let _ = write!(out, "{:<5}", line.fold);
        match &line.outcome {
            Ok(r) => {
                for m in &config.metrics {
                    let v = match m {
                        Metric::RocAuc => r.roc_auc,
                        Metric::Accuracy => r.accuracy,
                        Metric::F1 => r.f1,
                    };
                    let _ = write!(out, " {v:>9.4}");
                }
                let _ = writeln!(out, "  {}", line.note);
            }
            Err(e) => {
                let _ = writeln!(out, " failed: {}", e.message);
            }
        }
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<(), ReportError> {
    fs::write(path, text).map_err(io_at(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        let rows = vec![FoldRow {
            dataset: "d".into(),
            method: "m".into(),
            fold: 3,
            roc_auc: 0.1 + 0.2,
            accuracy: 1.0 / 3.0,
            f1: 0.0,
        }];
        write_rows(
            &path,
            &rows,
            &["dataset", "method", "fold", "roc_auc", "accuracy", "f1"],
        )
        .unwrap();
        assert_eq!(read_fold_rows(&path).unwrap(), rows);
    }

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_bytes(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
