//! Metrics, cross-validation and rank statistics for comparing methods.

mod cv;
pub mod dist;
mod friedman;
mod metrics;
mod posthoc;
mod rank;

pub use cv::{cross_validate, summarize, CvSummary, FoldError, FoldResult, MetricSummary};
pub use friedman::{friedman_from_ranks, friedman_test, FriedmanResult};
pub use metrics::{accuracy_f1, predict_labels, roc_auc, Confusion};
pub use posthoc::{nemenyi, posthoc_pairwise, tukey_hsd, Pairwise, PosthocMethod, Relation};
pub use rank::{average_rank, midranks, GridCell, MetricGrid, RankTable, RankedMethod, ScoreTable};

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("AUC undefined: only one class present")]
    SingleClass,
    #[error("length mismatch: {0} scores, {1} labels")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("non-finite score at position {0}")]
    NonFiniteScore(usize),
    #[error("all scores are identical")]
    DegenerateScores,
    #[error("need at least {min} methods, got {got}")]
    TooFewMethods { min: usize, got: usize },
    #[error("need at least {min} blocks, got {got}")]
    TooFewBlocks { min: usize, got: usize },
    #[error("table row {row} has {got} values, expected {expected}")]
    RaggedTable { row: usize, expected: usize, got: usize },
    #[error("non-finite table value at block {block}, method {method}")]
    NonFiniteValue { block: usize, method: usize },
    #[error("Friedman test not significant (p = {p}) at alpha = {alpha}")]
    NotSignificant { p: f64, alpha: f64 },
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("grid is missing the cell ({row}, {column})")]
    MissingCell { row: usize, column: usize },
    #[error("duplicate method name {0:?}")]
    DuplicateMethod(String),
    #[error("numerical routine failed: {0}")]
    Numerical(&'static str),
}
