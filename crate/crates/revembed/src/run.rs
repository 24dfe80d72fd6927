//! End-to-end experiment execution: validate, load, fit every fold in
//! parallel, evaluate and write the reports.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use crate::config::{ConfigError, ExperimentConfig};
use crate::formats::{load_dataset, write_checkpoint, FormatError};
use crate::pipeline::{fit_fold, fold_indices, FoldFit, Prepared};
use crate::report::{
    render_summary, sha256_bytes, sha256_file, write_rows, write_text, DatasetInfo, FailureRow, FileDigest, FoldLine,
    FoldRow, InputDigest, Manifest, ReportError, FAILURES_FILE, FOLDS_FILE, MANIFEST_FILE, SUMMARY_FILE,
};
use revembed_core::corpus::{CorpusError, Dataset, Polarity};
use revembed_core::eval::{FoldError, FoldResult};

/// Overrides the configured worker count.
pub const WORKERS_ENV: &str = "REVEMBED_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub lines: Vec<FoldLine>,
    pub manifest: Manifest,
}

impl RunOutcome {
    pub fn failed_folds(&self) -> usize {
        self.lines.iter().filter(|l| l.outcome.is_err()).count()
    }
}

/// `REVEMBED_WORKERS`, then the config, then the machine's parallelism.
pub fn worker_count(configured: Option<usize>) -> Result<usize, ConfigError> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        return match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(ConfigError::Invalid(format!(
                "{WORKERS_ENV}={v:?} is not a positive integer"
            ))),
        };
    }
    Ok(configured.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())))
}

/// Fits every fold on up to `workers` threads. Results are indexed by
/// fold whatever the completion order; a panicking fold becomes an error.
pub fn fit_folds(
    config: &ExperimentConfig,
    dataset: &Dataset,
    prepared: &Prepared,
    workers: usize,
) -> Vec<Result<FoldFit, String>> {
    let k = dataset.k();
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<FoldFit, String>>>> = (0..k).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, k) {
            s.spawn(|| loop {
                let fold = next.fetch_add(1, Ordering::Relaxed);
                if fold >= k {
                    break;
                }
                let started = Instant::now();
                let result = catch_unwind(AssertUnwindSafe(|| fit_fold(config, dataset, prepared, fold)))
                    .unwrap_or_else(|p| {
                        let msg = p
                            .downcast_ref::<String>()
                            .cloned()
                            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                            .unwrap_or_default();
                        Err(format!("panicked: {msg}"))
                    });
                log::info!("fold {fold} finished in {:.2?}", started.elapsed());
                *slots[fold].lock().unwrap_or_else(|e| e.into_inner()) = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| {
            m.into_inner()
                .unwrap_or_else(|e| e.into_inner())
                .unwrap_or_else(|| Err("not run".into()))
        })
        .collect()
}

fn evaluate(dataset: &Dataset, method: &str, fold: usize, fit: &Result<FoldFit, String>) -> FoldLine {
    let (_, test) = fold_indices(dataset, fold);
    let labels: Vec<Polarity> = test.iter().map(|&i| dataset.documents()[i].polarity).collect();
    let outcome = match fit {
        Ok(f) => FoldResult::evaluate(method, fold, &f.probabilities, &labels).map_err(|e| FoldError {
            fold,
            message: e.to_string(),
        }),
        Err(message) => Err(FoldError {
            fold,
            message: message.clone(),
        }),
    };
    FoldLine {
        fold,
        outcome,
        note: fit.as_ref().map(|f| f.note.clone()).unwrap_or_default(),
    }
}

/// Validates `config_path`, runs every fold and writes the reports into
/// `out_dir`. Fold failures are reported, not returned as errors.
pub fn run_experiment(config_path: &Path, out_dir: &Path) -> Result<RunOutcome, RunError> {
    let config_bytes = fs::read(config_path).map_err(|source| ConfigError::Read {
        path: config_path.to_owned(),
        source,
    })?;
    let config = ExperimentConfig::load(config_path)?;
    let base = config_path.parent().unwrap_or(Path::new(""));
    let resolved = config.resolved(base);
    let workers = worker_count(config.workers)?;

    let loaded = load_dataset(&resolved.dataset.path, &resolved.dataset.schema)?;
    let dataset = if config.dataset.assign_folds {
        loaded
            .dataset
            .with_assigned_folds(config.dataset.schema.folds, config.seed)?
    } else if loaded.dataset.has_folds() {
        loaded.dataset
    } else {
        return Err(ConfigError::Invalid(format!(
            "{} has documents without a fold; set dataset.assign_folds = true",
            resolved.dataset.path.display()
        ))
        .into());
    };
    log::info!(
        "{}: {} documents, {} folds, {workers} workers",
        dataset.name(),
        dataset.len(),
        dataset.k()
    );

    let prepared = Prepared::load(&resolved, &dataset)?;
    let fits = fit_folds(&resolved, &dataset, &prepared, workers);
    let lines: Vec<FoldLine> = fits
        .iter()
        .enumerate()
        .map(|(fold, fit)| evaluate(&dataset, &config.name, fold, fit))
        .collect();

    fs::create_dir_all(out_dir).map_err(|source| RunError::Io {
        path: out_dir.to_owned(),
        source,
    })?;
    if config.checkpoints {
        write_checkpoints(&config, out_dir, &fits)?;
    }
    let (negative, positive) = dataset.class_counts();
    let info = DatasetInfo {
        name: dataset.name().to_owned(),
        documents: dataset.len(),
        negative,
        positive,
        folds: dataset.k(),
        fold_sizes: dataset.fold_sizes(),
        skipped_rows: loaded.skipped.len(),
        assigned_folds: config.dataset.assign_folds,
    };
    let rows: Vec<FoldRow> = lines
        .iter()
        .filter_map(|l| l.outcome.as_ref().ok())
        .map(|r| FoldRow::new(dataset.name(), r))
        .collect();
    let failures: Vec<FailureRow> = lines
        .iter()
        .filter_map(|l| l.outcome.as_ref().err())
        .map(|e| FailureRow {
            dataset: dataset.name().to_owned(),
            method: config.name.clone(),
            fold: e.fold,
            message: e.message.clone(),
        })
        .collect();
    let folds_path = out_dir.join(FOLDS_FILE);
    write_rows(
        &folds_path,
        &rows,
        &["dataset", "method", "fold", "roc_auc", "accuracy", "f1"],
    )?;
    let failures_path = out_dir.join(FAILURES_FILE);
    write_rows(&failures_path, &failures, &["dataset", "method", "fold", "message"])?;
    let summary_path = out_dir.join(SUMMARY_FILE);
    write_text(&summary_path, &render_summary(&config, &info, &lines))?;

    let mut inputs = Vec::new();
    for ((field, path), (_, resolved_path)) in config.input_paths().into_iter().zip(resolved.input_paths()) {
        let (sha256, bytes) = sha256_file(resolved_path)?;
        inputs.push(InputDigest {
            field: field.to_owned(),
            path: path.display().to_string(),
            bytes,
            sha256,
        });
    }
    let mut reports = Vec::new();
    for p in [&folds_path, &failures_path, &summary_path] {
        let file = p
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        reports.push(FileDigest {
            file,
            sha256: sha256_file(p)?.0,
        });
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        core_version: revembed_core::VERSION.to_owned(),
        name: config.name.clone(),
        family: config.pipeline.family().to_owned(),
        seed: config.seed,
        config_sha256: sha256_bytes(&config_bytes),
        config,
        inputs,
        dataset: info,
        folds_ok: rows.len(),
        folds_failed: failures.len(),
        reports,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(ReportError::from)?;
    write_text(&out_dir.join(MANIFEST_FILE), &(json + "\n"))?;
    Ok(RunOutcome { lines, manifest })
}

fn write_checkpoints(
    config: &ExperimentConfig,
    out_dir: &Path,
    fits: &[Result<FoldFit, String>],
) -> Result<(), RunError> {
    let dir = out_dir.join("checkpoints");
    fs::create_dir_all(&dir).map_err(|source| RunError::Io {
        path: dir.clone(),
        source,
    })?;
    for (fold, fit) in fits.iter().enumerate() {
        let Ok(fit) = fit else { continue };
        let record = serde_json::json!({
            "name": config.name,
            "family": config.pipeline.family(),
            "fold": fold,
            "fit": fit.note,
            "pipeline": config.pipeline,
        });
        let path = dir.join(format!("fold{fold}.eknn"));
        let file = fs::File::create(&path).map_err(|source| RunError::Io {
            path: path.clone(),
            source,
        })?;
        write_checkpoint(std::io::BufWriter::new(file), &record.to_string(), &fit.params)?;
    }
    Ok(())
}
