//! Document vectors from per-token transformer outputs.
//!
//! Only the first `real_length` positions of a document take part in any
//! statistic; whatever sits in pad positions is ignored.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::math::sqrt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TlmError {
    #[error("document {index} out of range (n_docs = {n_docs})")]
    DocOutOfRange { index: usize, n_docs: usize },
    #[error("document {doc}: real length {len} outside 1..={n_tokens}")]
    RealLength { doc: usize, len: usize, n_tokens: usize },
    #[error("payload holds {actual} values, expected {expected}")]
    PayloadSize { expected: usize, actual: usize },
    #[error("document {doc}: non-finite value in a real token")]
    NonFinite { doc: usize },
    #[error("dimension and token count must be positive")]
    EmptyShape,
    #[error("unknown aggregation mode {0:?}")]
    UnknownMode(alloc::string::String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMode {
    First,
    Last,
    MeanAll,
    /// First token, then mean and population std of the remaining tokens.
    FirstMeanStd,
    /// Mean, min and max over all tokens.
    MeanMinMax,
}

impl AggregationMode {
    pub const ALL: [AggregationMode; 5] = [
        AggregationMode::First,
        AggregationMode::Last,
        AggregationMode::MeanAll,
        AggregationMode::FirstMeanStd,
        AggregationMode::MeanMinMax,
    ];

    pub fn output_dim(self, dim: usize) -> usize {
        match self {
            AggregationMode::First | AggregationMode::Last | AggregationMode::MeanAll => dim,
            AggregationMode::FirstMeanStd | AggregationMode::MeanMinMax => 3 * dim,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AggregationMode::First => "first",
            AggregationMode::Last => "last",
            AggregationMode::MeanAll => "mean_all",
            AggregationMode::FirstMeanStd => "first_mean_std",
            AggregationMode::MeanMinMax => "mean_min_max",
        }
    }
}

impl fmt::Display for AggregationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AggregationMode {
    type Err = TlmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AggregationMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| TlmError::UnknownMode(s.into()))
    }
}

/// One document's `n_tokens x dim` block and its real length.
#[derive(Debug, Clone, Copy)]
pub struct DocTokens<'a> {
    data: &'a [f32],
    real_length: usize,
    dim: usize,
}

impl<'a> DocTokens<'a> {
    pub fn new(data: &'a [f32], real_length: usize, dim: usize) -> Result<Self, TlmError> {
        if dim == 0 || data.is_empty() {
            return Err(TlmError::EmptyShape);
        }
        if !data.len().is_multiple_of(dim) {
            return Err(TlmError::PayloadSize {
                expected: data.len() / dim * dim,
                actual: data.len(),
            });
        }
        let n_tokens = data.len() / dim;
        if real_length == 0 || real_length > n_tokens {
            return Err(TlmError::RealLength {
                doc: 0,
                len: real_length,
                n_tokens,
            });
        }
        Ok(DocTokens { data, real_length, dim })
    }

    pub fn real_length(&self) -> usize {
        self.real_length
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn token(&self, t: usize) -> &'a [f32] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }
}

/// A whole exported tensor: `n_docs x n_tokens x dim`, document-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenTensor {
    n_tokens: usize,
    dim: usize,
    real_lengths: Vec<u32>,
    payload: Vec<f32>,
}

impl TokenTensor {
    /// Validates shape, real lengths and finiteness of real-token values.
    pub fn new(n_tokens: usize, dim: usize, real_lengths: Vec<u32>, payload: Vec<f32>) -> Result<Self, TlmError> {
        if n_tokens == 0 || dim == 0 {
            return Err(TlmError::EmptyShape);
        }
        let expected = real_lengths.len() * n_tokens * dim;
        if payload.len() != expected {
            return Err(TlmError::PayloadSize {
                expected,
                actual: payload.len(),
            });
        }
        for (doc, &len) in real_lengths.iter().enumerate() {
            let len = len as usize;
            if len == 0 || len > n_tokens {
                return Err(TlmError::RealLength { doc, len, n_tokens });
            }
            let start = doc * n_tokens * dim;
            if payload[start..start + len * dim].iter().any(|v| !v.is_finite()) {
                return Err(TlmError::NonFinite { doc });
            }
        }
        Ok(TokenTensor {
            n_tokens,
            dim,
            real_lengths,
            payload,
        })
    }

    pub fn n_docs(&self) -> usize {
        self.real_lengths.len()
    }

    pub fn n_tokens(&self) -> usize {
        self.n_tokens
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn real_lengths(&self) -> &[u32] {
        &self.real_lengths
    }

    pub fn payload(&self) -> &[f32] {
        &self.payload
    }

    pub fn doc(&self, index: usize) -> Result<DocTokens<'_>, TlmError> {
        if index >= self.n_docs() {
            return Err(TlmError::DocOutOfRange {
                index,
                n_docs: self.n_docs(),
            });
        }
        let block = self.n_tokens * self.dim;
        Ok(DocTokens {
            data: &self.payload[index * block..(index + 1) * block],
            real_length: self.real_lengths[index] as usize,
            dim: self.dim,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregated {
    pub values: Vec<f64>,
    /// Set for `first_mean_std` on a one-token document, where the mean
    /// and std of the (empty) remainder are reported as zeros.
    pub flagged: bool,
}

pub fn aggregate(tensor: &TokenTensor, index: usize, mode: AggregationMode) -> Result<Aggregated, TlmError> {
    Ok(aggregate_doc(tensor.doc(index)?, mode))
}

pub fn aggregate_doc(doc: DocTokens<'_>, mode: AggregationMode) -> Aggregated {
    let d = doc.dim;
    let n = doc.real_length;
    let widen = |t: usize| doc.token(t).iter().map(|&x| x as f64).collect::<Vec<f64>>();
    match mode {
        AggregationMode::First => Aggregated {
            values: widen(0),
            flagged: false,
        },
        AggregationMode::Last => Aggregated {
            values: widen(n - 1),
            flagged: false,
        },
        AggregationMode::MeanAll => Aggregated {
            values: mean_std(doc, 0..n).0,
            flagged: false,
        },
        AggregationMode::FirstMeanStd => {
            let mut values = widen(0);
            let (mean, std) = mean_std(doc, 1..n);
            values.extend(mean);
            values.extend(std);
            Aggregated {
                values,
                flagged: n == 1,
            }
        }
        AggregationMode::MeanMinMax => {
            let mut min = vec![f64::INFINITY; d];
            let mut max = vec![f64::NEG_INFINITY; d];
            for t in 0..n {
                for (k, &x) in doc.token(t).iter().enumerate() {
                    let x = x as f64;
                    min[k] = min[k].min(x);
                    max[k] = max[k].max(x);
                }
            }
            let mut values = mean_std(doc, 0..n).0;
            values.extend(min);
            values.extend(max);
            Aggregated { values, flagged: false }
        }
    }
}

/// Component-wise mean and population std over `range`; zeros when empty.
fn mean_std(doc: DocTokens<'_>, range: core::ops::Range<usize>) -> (Vec<f64>, Vec<f64>) {
    let d = doc.dim;
    let count = range.len();
    let mut mean = vec![0.0; d];
    let mut var = vec![0.0; d];
    if count == 0 {
        return (mean, var);
    }
    for t in range.clone() {
        for (m, &x) in mean.iter_mut().zip(doc.token(t)) {
            *m += x as f64;
        }
    }
    mean.iter_mut().for_each(|m| *m /= count as f64);
    // two-pass variance
    for t in range {
        for ((v, &x), m) in var.iter_mut().zip(doc.token(t)).zip(&mean) {
            let dx = x as f64 - m;
            *v += dx * dx;
        }
    }
    let std = var.into_iter().map(|v| sqrt(v / count as f64)).collect();
    (mean, std)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tensor(n_tokens: usize, dim: usize, lens: &[u32], f: impl Fn(usize, usize, usize) -> f32) -> TokenTensor {
        let mut payload = Vec::new();
        for d in 0..lens.len() {
            for t in 0..n_tokens {
                for k in 0..dim {
                    payload.push(f(d, t, k));
                }
            }
        }
        TokenTensor::new(n_tokens, dim, lens.to_vec(), payload).unwrap()
    }

    #[test]
    fn constant_tensor_statistics() {
        let t = tensor(4, 3, &[4, 2], |_, _, _| 1.5);
        let mean = aggregate(&t, 1, AggregationMode::MeanAll).unwrap();
        assert_eq!(mean.values, vec![1.5; 3]);
        let mmm = aggregate(&t, 0, AggregationMode::MeanMinMax).unwrap();
        assert_eq!(mmm.values, vec![1.5; 9]);
        let fms = aggregate(&t, 0, AggregationMode::FirstMeanStd).unwrap();
        assert_eq!(&fms.values[6..], &[0.0; 3]);
    }

    #[test]
    fn output_dims() {
        for mode in AggregationMode::ALL {
            let t = tensor(5, 768, &[3], |_, t, k| (t * k) as f32);
            assert_eq!(aggregate(&t, 0, mode).unwrap().values.len(), mode.output_dim(768));
        }
        assert_eq!(AggregationMode::FirstMeanStd.output_dim(768), 2304);
    }

    #[test]
    fn single_token_document() {
        let t = tensor(3, 2, &[1], |_, t, k| (t * 10 + k) as f32);
        let first = aggregate(&t, 0, AggregationMode::First).unwrap();
        let last = aggregate(&t, 0, AggregationMode::Last).unwrap();
        let mean = aggregate(&t, 0, AggregationMode::MeanAll).unwrap();
        assert_eq!(first, last);
        assert_eq!(first, mean);
        let fms = aggregate(&t, 0, AggregationMode::FirstMeanStd).unwrap();
        assert!(fms.flagged);
        assert_eq!(fms.values, vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn last_uses_real_length() {
        let t = tensor(4, 1, &[2], |_, t, _| t as f32);
        assert_eq!(aggregate(&t, 0, AggregationMode::Last).unwrap().values, vec![1.0]);
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            TokenTensor::new(2, 1, vec![3], vec![0.0; 2]),
            Err(TlmError::RealLength {
                doc: 0,
                len: 3,
                n_tokens: 2
            })
        ));
        assert!(matches!(
            TokenTensor::new(2, 1, vec![0], vec![0.0; 2]),
            Err(TlmError::RealLength { .. })
        ));
        assert!(matches!(
            TokenTensor::new(2, 1, vec![1], vec![0.0; 3]),
            Err(TlmError::PayloadSize { .. })
        ));
        assert!(matches!(
            TokenTensor::new(2, 1, vec![1], vec![f32::NAN, 0.0]),
            Err(TlmError::NonFinite { doc: 0 })
        ));
        // non-finite pads are tolerated
        assert!(TokenTensor::new(2, 1, vec![1], vec![0.0, f32::NAN]).is_ok());
        let t = tensor(2, 1, &[1], |_, _, _| 0.0);
        assert!(matches!(
            aggregate(&t, 1, AggregationMode::First),
            Err(TlmError::DocOutOfRange { .. })
        ));
    }

    #[test]
    fn mode_names_round_trip() {
        for mode in AggregationMode::ALL {
            assert_eq!(mode.as_str().parse::<AggregationMode>().unwrap(), mode);
        }
        assert!("median".parse::<AggregationMode>().is_err());
    }
}
