//! Bag-of-words document features: n-gram vocabularies, feature
//! selection, TF-IDF weighting and latent semantic analysis.
//!
//! Term weights follow `w_ij = tf_ij * ln(N / df_i)` with raw counts for
//! `tf` and no smoothing or normalization.

mod lsa;
mod select;
mod tfidf;
mod vocab;

pub use lsa::{lsa_fit, lsa_fit_with, lsa_transform, LsaModel, LsaOptions};
pub use select::{feature_scores, select_features, FeatureSelection, SelectionMethod};
pub use tfidf::{count_vector, tfidf_matrix, tfidf_transform, SparseVector};
pub use vocab::{build_vocabulary, for_each_ngram, NgramRange, Vocabulary};

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BowError {
    #[error("n-gram range ({min}, {max}) must satisfy 1 <= min <= max <= 3")]
    InvalidNgramRange { min: usize, max: usize },
    #[error("min_count must be at least 1")]
    ZeroMinCount,
    #[error("vocabulary is empty after filtering")]
    EmptyVocabulary,
    #[error("selection size must be at least 1")]
    ZeroSelectionSize,
    #[error("{docs} documents but {labels} labels")]
    LabelCount { docs: usize, labels: usize },
    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),
    #[error("rank {rank} must lie in 1..={max}")]
    InvalidRank { rank: usize, max: usize },
    #[error("matrix has no non-zero entry")]
    ZeroMatrix,
    #[error("truncated SVD did not converge within {0} power iterations")]
    NoConvergence(usize),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("sparse vector is malformed: {0}")]
    MalformedSparse(&'static str),
}
