use alloc::vec::Vec;

use hashbrown::HashMap;
use serde::{Deserialize, Serialize};

use super::{for_each_ngram, BowError, Vocabulary};
use crate::linalg::CsrMatrix;
use crate::textprep::TokenizedDoc;

/// Sparse document vector with strictly increasing indices and no
/// stored zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    indices: Vec<u32>,
    values: Vec<f64>,
    dim: usize,
}

impl SparseVector {
    pub fn empty(dim: usize) -> Self {
        SparseVector {
            indices: Vec::new(),
            values: Vec::new(),
            dim,
        }
    }

    /// Builds from `(index, value)` pairs in any order. Zero values are
    /// dropped; repeated indices are an error.
    pub fn from_pairs(dim: usize, mut pairs: Vec<(u32, f64)>) -> Result<Self, BowError> {
        pairs.sort_unstable_by_key(|p| p.0);
        let mut indices = Vec::with_capacity(pairs.len());
        let mut values = Vec::with_capacity(pairs.len());
        let mut prev = None;
        for (i, v) in pairs {
            if i as usize >= dim {
                return Err(BowError::MalformedSparse("index out of range"));
            }
            if prev.replace(i) == Some(i) {
                return Err(BowError::MalformedSparse("repeated index"));
            }
            if v != 0.0 {
                indices.push(i);
                values.push(v);
            }
        }
        Ok(SparseVector { indices, values, dim })
    }

    pub fn from_dense(dense: &[f64]) -> Self {
        let (indices, values) = dense
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i as u32, v))
            .unzip();
        SparseVector {
            indices,
            values,
            dim: dense.len(),
        }
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn get(&self, i: u32) -> f64 {
        match self.indices.binary_search(&i) {
            Ok(pos) => self.values[pos],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.dim];
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            out[i as usize] = v;
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }
}

/// Raw n-gram counts of `doc` restricted to `vocab`, sorted by index.
pub fn count_vector(doc: &TokenizedDoc, vocab: &Vocabulary) -> Vec<(u32, u32)> {
    let mut counts: HashMap<u32, u32> = HashMap::new();
    for_each_ngram(&doc.tokens, vocab.ngram_range(), |gram| {
        if let Some(i) = vocab.get(gram) {
            *counts.entry(i as u32).or_insert(0) += 1;
        }
    });
    let mut out: Vec<(u32, u32)> = counts.into_iter().collect();
    out.sort_unstable_by_key(|p| p.0);
    out
}

/// `w_i = tf_i * ln(N / df_i)`; unknown n-grams are ignored and zero
/// weights are not stored.
pub fn tfidf_transform(doc: &TokenizedDoc, vocab: &Vocabulary) -> SparseVector {
    let mut indices = Vec::new();
    let mut values = Vec::new();
    for (i, tf) in count_vector(doc, vocab) {
        let w = tf as f64 * vocab.idf(i as usize);
        if w != 0.0 {
            indices.push(i);
            values.push(w);
        }
    }
    SparseVector {
        indices,
        values,
        dim: vocab.len(),
    }
}

/// Stacks TF-IDF rows into a CSR matrix (documents x terms).
pub fn tfidf_matrix(rows: &[SparseVector]) -> Result<CsrMatrix, BowError> {
    let dim = rows.first().map_or(0, SparseVector::dim);
    if let Some(bad) = rows.iter().find(|r| r.dim != dim) {
        return Err(BowError::DimensionMismatch {
            expected: dim,
            actual: bad.dim,
        });
    }
    Ok(CsrMatrix::from_rows(
        dim,
        rows.iter().map(|r| (&r.indices[..], &r.values[..])),
    ))
}
