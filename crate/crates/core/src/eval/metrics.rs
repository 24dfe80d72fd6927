use alloc::vec::Vec;

use super::EvalError;
use crate::corpus::Polarity;

/// Rank-sum ROC-AUC with midranks for tied scores: the probability that
/// a random positive outscores a random negative, ties counting one half.
pub fn roc_auc(scores: &[f64], labels: &[Polarity]) -> Result<f64, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch(scores.len(), labels.len()));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(EvalError::NonFiniteScore(i));
    }
    let n_pos = labels.iter().filter(|l| l.is_positive()).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // twice the positive rank sum, kept integral so the result is exact
    let mut rank_sum2: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let midrank2 = (i + 1 + j) as u64;
        let pos_in_group = order[i..j].iter().filter(|&&k| labels[k].is_positive()).count() as u64;
        rank_sum2 += midrank2 * pos_in_group;
        i = j;
    }
    let u2 = rank_sum2 - n_pos * (n_pos + 1);
    Ok(u2 as f64 / (2 * n_pos * n_neg) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_predictions(predictions: &[Polarity], labels: &[Polarity]) -> Result<Self, EvalError> {
        if predictions.len() != labels.len() {
            return Err(EvalError::LengthMismatch(predictions.len(), labels.len()));
        }
        let mut c = Confusion::default();
        for (&p, &l) in predictions.iter().zip(labels) {
            match (p.is_positive(), l.is_positive()) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    /// Positive-class F1; zero when precision and recall are both zero.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if self.tp == 0 || denom == 0 {
            0.0
        } else {
            2.0 * self.tp as f64 / denom as f64
        }
    }
}

pub fn accuracy_f1(predictions: &[Polarity], labels: &[Polarity]) -> Result<(f64, f64), EvalError> {
    if predictions.is_empty() {
        return Err(EvalError::Empty);
    }
    let c = Confusion::from_predictions(predictions, labels)?;
    Ok((c.accuracy(), c.f1()))
}

/// Positive when the probability exceeds 0.5.
pub fn predict_labels(probabilities: &[f64]) -> Vec<Polarity> {
    probabilities
        .iter()
        .map(|&p| {
            if p > 0.5 {
                Polarity::Positive
            } else {
                Polarity::Negative
            }
        })
        .collect()
}
