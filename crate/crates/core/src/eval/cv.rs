use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::metrics::{accuracy_f1, predict_labels, roc_auc};
use super::EvalError;
use crate::corpus::{CorpusError, Dataset, FoldView, Polarity};
use crate::math::sqrt;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub method: String,
    pub fold: usize,
    pub roc_auc: f64,
    pub accuracy: f64,
    pub f1: f64,
}

impl FoldResult {
    /// Scores one fold from positive-class probabilities. A scorer that
    /// returns the same value for every test document carries no ranking
    /// information and is reported as an error.
    pub fn evaluate(method: &str, fold: usize, probabilities: &[f64], labels: &[Polarity]) -> Result<Self, EvalError> {
        if probabilities.is_empty() {
            return Err(EvalError::Empty);
        }
        if probabilities.iter().all(|&p| p == probabilities[0]) {
            return Err(EvalError::DegenerateScores);
        }
        let roc_auc = roc_auc(probabilities, labels)?;
        let (accuracy, f1) = accuracy_f1(&predict_labels(probabilities), labels)?;
        Ok(FoldResult {
            method: method.into(),
            fold,
            roc_auc,
            accuracy,
            f1,
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("fold {fold}: {message}")]
pub struct FoldError {
    pub fold: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Population standard deviation (divides by the fold count).
    pub std: f64,
}

impl MetricSummary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        MetricSummary { mean, std: sqrt(var) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub folds: usize,
    pub roc_auc: MetricSummary,
    pub accuracy: MetricSummary,
    pub f1: MetricSummary,
}

pub fn summarize(results: &[FoldResult]) -> Result<CvSummary, EvalError> {
    if results.is_empty() {
        return Err(EvalError::Empty);
    }
    let pick = |f: fn(&FoldResult) -> f64| MetricSummary::of(&results.iter().map(f).collect::<Vec<_>>());
    Ok(CvSummary {
        folds: results.len(),
        roc_auc: pick(|r| r.roc_auc),
        accuracy: pick(|r| r.accuracy),
        f1: pick(|r| r.f1),
    })
}

/// Runs `scorer` on every fold in index order. The scorer returns one
/// positive-class probability per test document of the view; failures
/// are kept per fold.
pub fn cross_validate<F>(
    dataset: &Dataset,
    method: &str,
    mut scorer: F,
) -> Result<Vec<Result<FoldResult, FoldError>>, CorpusError>
where
    F: FnMut(&FoldView<'_>) -> Result<Vec<f64>, String>,
{
    let mut out = Vec::with_capacity(dataset.k());
    for fold in 0..dataset.k() {
        let view = dataset.fold_view(fold)?;
        out.push(evaluate_view(method, &view, scorer(&view)));
    }
    Ok(out)
}

pub(crate) fn evaluate_view(
    method: &str,
    view: &FoldView<'_>,
    scores: Result<Vec<f64>, String>,
) -> Result<FoldResult, FoldError> {
    let fold = view.fold;
    let scores = scores.map_err(|message| FoldError { fold, message })?;
    let labels: Vec<Polarity> = view.test.iter().map(|d| d.polarity).collect();
    if scores.len() != labels.len() {
        return Err(FoldError {
            fold,
            message: alloc::format!("{}", EvalError::LengthMismatch(scores.len(), labels.len())),
        });
    }
    FoldResult::evaluate(method, fold, &scores, &labels).map_err(|e| FoldError {
        fold,
        message: alloc::format!("{e}"),
    })
}
