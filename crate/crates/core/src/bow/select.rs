use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{count_vector, BowError, Vocabulary};
use crate::corpus::Polarity;
use crate::textprep::TokenizedDoc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMethod {
    /// Total occurrence count.
    Frequency,
    /// One-degree-of-freedom chi-square of term-count mass per class.
    Chi2,
    /// One-way ANOVA F of TF-IDF values grouped by class.
    Fvalue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSelection {
    pub vocabulary: Vocabulary,
    /// Set when more features were requested than the vocabulary holds;
    /// the full vocabulary is returned in that case.
    pub size_exceeded: bool,
}

/// Scores every vocabulary entry over `docs`. Scores are non-negative;
/// an F statistic with positive between-class and zero within-class
/// variance is `+inf`.
pub fn feature_scores(
    vocab: &Vocabulary,
    docs: &[TokenizedDoc],
    labels: &[Polarity],
    method: SelectionMethod,
) -> Result<Vec<f64>, BowError> {
    if docs.len() != labels.len() {
        return Err(BowError::LabelCount {
            docs: docs.len(),
            labels: labels.len(),
        });
    }
    let dim = vocab.len();
    // per-class sums of the feature value and of its square
    let mut sum = [vec![0.0f64; dim], vec![0.0f64; dim]];
    let mut sum_sq = [vec![0.0f64; dim], vec![0.0f64; dim]];
    let mut class_docs = [0usize; 2];
    for (doc, &label) in docs.iter().zip(labels) {
        let c = label as usize;
        class_docs[c] += 1;
        for (i, tf) in count_vector(doc, vocab) {
            let i = i as usize;
            let x = match method {
                SelectionMethod::Fvalue => tf as f64 * vocab.idf(i),
                _ => tf as f64,
            };
            sum[c][i] += x;
            sum_sq[c][i] += x * x;
        }
    }
    let n = docs.len() as f64;
    let scores = (0..dim)
        .map(|i| match method {
            SelectionMethod::Frequency => sum[0][i] + sum[1][i],
            SelectionMethod::Chi2 => {
                let total = sum[0][i] + sum[1][i];
                (0..2)
                    .map(|c| {
                        let expected = total * class_docs[c] as f64 / n;
                        if expected > 0.0 {
                            let d = sum[c][i] - expected;
                            d * d / expected
                        } else {
                            0.0
                        }
                    })
                    .sum()
            }
            SelectionMethod::Fvalue => anova_f([sum[0][i], sum[1][i]], [sum_sq[0][i], sum_sq[1][i]], class_docs),
        })
        .collect();
    Ok(scores)
}

fn anova_f(sum: [f64; 2], sum_sq: [f64; 2], counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if counts[0] == 0 || counts[1] == 0 || n <= 2.0 {
        return 0.0;
    }
    let grand = (sum[0] + sum[1]) / n;
    let mut between = 0.0;
    let mut within = 0.0;
    for c in 0..2 {
        let nc = counts[c] as f64;
        let mean = sum[c] / nc;
        between += nc * (mean - grand) * (mean - grand);
        within += (sum_sq[c] - nc * mean * mean).max(0.0);
    }
    // cancellation noise when every value in a class is equal
    let scale = sum_sq[0] + sum_sq[1];
    if within <= scale * 1e-14 {
        within = 0.0;
    }
    if between <= scale * 1e-14 {
        return 0.0;
    }
    if within == 0.0 {
        return f64::INFINITY;
    }
    between / (within / (n - 2.0))
}

/// Keeps the `size` best-scoring entries. Ties go to the lower original
/// index; surviving entries keep their relative order and are
/// re-indexed densely.
pub fn select_features(
    vocab: &Vocabulary,
    docs: &[TokenizedDoc],
    labels: &[Polarity],
    method: SelectionMethod,
    size: usize,
) -> Result<FeatureSelection, BowError> {
    if size == 0 {
        return Err(BowError::ZeroSelectionSize);
    }
    if size >= vocab.len() {
        if docs.len() != labels.len() {
            return Err(BowError::LabelCount {
                docs: docs.len(),
                labels: labels.len(),
            });
        }
        return Ok(FeatureSelection {
            vocabulary: vocab.clone(),
            size_exceeded: size > vocab.len(),
        });
    }
    let scores = feature_scores(vocab, docs, labels, method)?;
    let mut order: Vec<usize> = (0..vocab.len()).collect();
    order.sort_by(|&a, &b| {
        let (sa, sb) = (nan_low(scores[a]), nan_low(scores[b]));
        sb.total_cmp(&sa).then(a.cmp(&b))
    });
    let mut keep = order[..size].to_vec();
    keep.sort_unstable();
    Ok(FeatureSelection {
        vocabulary: vocab.subset(&keep),
        size_exceeded: false,
    })
}

fn nan_low(x: f64) -> f64 {
    if x.is_nan() {
        f64::NEG_INFINITY
    } else {
        x
    }
}
