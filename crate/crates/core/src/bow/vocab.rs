use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use hashbrown::HashMap;
use serde::{Deserialize, Serialize};

use super::BowError;
use crate::textprep::{StopWords, TokenizedDoc};

/// Inclusive range of n-gram orders, `1 <= min <= max <= 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramRange {
    min: usize,
    max: usize,
}

impl NgramRange {
    pub const UNIGRAMS: NgramRange = NgramRange { min: 1, max: 1 };

    pub fn new(min: usize, max: usize) -> Result<Self, BowError> {
        if min < 1 || min > max || max > 3 {
            return Err(BowError::InvalidNgramRange { min, max });
        }
        Ok(NgramRange { min, max })
    }

    pub fn min(self) -> usize {
        self.min
    }

    pub fn max(self) -> usize {
        self.max
    }
}

/// Calls `f` with every n-gram of `tokens` (tokens joined by a single
/// space), scanning start positions left to right and, at each
/// position, orders from `min` to `max`.
pub fn for_each_ngram<F: FnMut(&str)>(tokens: &[String], range: NgramRange, mut f: F) {
    let mut buf = String::new();
    for start in 0..tokens.len() {
        for n in range.min..=range.max {
            let end = start + n;
            if end > tokens.len() {
                break;
            }
            buf.clear();
            for (k, tok) in tokens[start..end].iter().enumerate() {
                if k > 0 {
                    buf.push(' ');
                }
                buf.push_str(tok);
            }
            f(&buf);
        }
    }
}

/// An n-gram index with document frequencies over a corpus of `n_docs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    df: Vec<u32>,
    n_docs: usize,
    ngram_range: NgramRange,
}

impl Vocabulary {
    /// Assembles a vocabulary from parallel term/df lists, checking that
    /// terms are unique and `1 <= df <= n_docs`.
    pub fn from_parts(
        terms: Vec<String>,
        df: Vec<u32>,
        n_docs: usize,
        ngram_range: NgramRange,
    ) -> Result<Self, BowError> {
        if terms.len() != df.len() {
            return Err(BowError::InvalidVocabulary(format!(
                "{} terms but {} df values",
                terms.len(),
                df.len()
            )));
        }
        let mut index = HashMap::with_capacity(terms.len());
        for (i, (term, &d)) in terms.iter().zip(&df).enumerate() {
            if d == 0 || d as usize > n_docs {
                return Err(BowError::InvalidVocabulary(format!(
                    "df {d} of {term:?} outside 1..={n_docs}"
                )));
            }
            let order = term.split(' ').count();
            if order < ngram_range.min || order > ngram_range.max {
                return Err(BowError::InvalidVocabulary(format!(
                    "{term:?} is outside the n-gram range"
                )));
            }
            if index.insert(term.clone(), i).is_some() {
                return Err(BowError::InvalidVocabulary(format!("duplicate term {term:?}")));
            }
        }
        Ok(Vocabulary {
            terms,
            index,
            df,
            n_docs,
            ngram_range,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn ngram_range(&self) -> NgramRange {
        self.ngram_range
    }

    pub fn get(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, i: usize) -> &str {
        &self.terms[i]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn df(&self, i: usize) -> u32 {
        self.df[i]
    }

    pub fn dfs(&self) -> &[u32] {
        &self.df
    }

    /// `ln(N / df_i)`
    pub fn idf(&self, i: usize) -> f64 {
        crate::math::ln(self.n_docs as f64 / self.df[i] as f64)
    }

    pub fn idf_of(&self, term: &str) -> Option<f64> {
        self.get(term).map(|i| self.idf(i))
    }

    /// Keeps the entries listed in `keep` (in that order), re-densifying
    /// indices.
    pub(crate) fn subset(&self, keep: &[usize]) -> Vocabulary {
        let terms: Vec<String> = keep.iter().map(|&i| self.terms[i].clone()).collect();
        let df = keep.iter().map(|&i| self.df[i]).collect();
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            terms,
            index,
            df,
            n_docs: self.n_docs,
            ngram_range: self.ngram_range,
        }
    }
}

struct TermStat {
    first_seen: usize,
    count: u64,
    df: u32,
    last_doc: usize,
}

/// Collects every n-gram in `range` whose total corpus count is at least
/// `min_count`, skipping unigrams listed in `stopwords`. Indices follow
/// first occurrence in a document-by-document scan.
pub fn build_vocabulary(
    docs: &[TokenizedDoc],
    range: NgramRange,
    min_count: u64,
    stopwords: &StopWords,
) -> Result<Vocabulary, BowError> {
    if min_count == 0 {
        return Err(BowError::ZeroMinCount);
    }
    let mut stats: HashMap<String, TermStat> = HashMap::new();
    for (d, doc) in docs.iter().enumerate() {
        for_each_ngram(&doc.tokens, range, |gram| {
            if let Some(stat) = stats.get_mut(gram) {
                stat.count += 1;
                if stat.last_doc != d {
                    stat.df += 1;
                    stat.last_doc = d;
                }
            } else {
                let first_seen = stats.len();
                stats.insert(
                    gram.to_owned(),
                    TermStat {
                        first_seen,
                        count: 1,
                        df: 1,
                        last_doc: d,
                    },
                );
            }
        });
    }
    let mut kept: Vec<(usize, String, u32)> = stats
        .into_iter()
        .filter(|(term, s)| s.count >= min_count && !(!term.contains(' ') && stopwords.contains(term)))
        .map(|(term, s)| (s.first_seen, term, s.df))
        .collect();
    if kept.is_empty() {
        return Err(BowError::EmptyVocabulary);
    }
    kept.sort_unstable_by_key(|k| k.0);
    let (terms, df): (Vec<String>, Vec<u32>) = kept.into_iter().map(|(_, t, d)| (t, d)).unzip();
    Vocabulary::from_parts(terms, df, docs.len(), range)
}
