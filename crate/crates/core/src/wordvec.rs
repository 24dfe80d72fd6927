//! Static word-vector tables and document embeddings built from them.
//!
//! Tables use the common text layout: a `count dim` header followed by
//! one `word v1 ... v_dim` line per word, space separated.

use alloc::borrow::ToOwned;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::{HashMap, HashSet};

use crate::bow::Vocabulary;
use crate::textprep::{transliterate, TokenizedDoc, PAD_TOKEN};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WordVecError {
    #[error("malformed header {0:?}: expected `<count> <dim>`")]
    MalformedHeader(String),
    #[error("dimension must be positive")]
    ZeroDim,
    #[error("line {line}: expected {expected} components, found {found}")]
    Arity { line: usize, expected: usize, found: usize },
    #[error("line {line}: cannot parse {token:?} as a number")]
    BadNumber { line: usize, token: String },
    #[error("line {line}: non-finite component")]
    NonFinite { line: usize },
    #[error("line {line}: missing word")]
    EmptyWord { line: usize },
    #[error("header declares {declared} vectors but {found} lines follow")]
    CountMismatch { declared: usize, found: usize },
    #[error("vector has length {actual}, table dimension is {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordVectorTable {
    dim: usize,
    declared_count: usize,
    index: HashMap<String, usize>,
    words: Vec<String>,
    data: Vec<f32>,
}

impl WordVectorTable {
    pub fn new(dim: usize) -> Result<Self, WordVecError> {
        if dim == 0 {
            return Err(WordVecError::ZeroDim);
        }
        Ok(WordVectorTable {
            dim,
            declared_count: 0,
            index: HashMap::new(),
            words: Vec::new(),
            data: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The count announced by the file header (equal to `len` for tables
    /// built in memory).
    pub fn declared_count(&self) -> usize {
        self.declared_count
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Inserts or overwrites; returns `true` when `word` was already present.
    pub fn insert(&mut self, word: &str, vector: &[f32]) -> Result<bool, WordVecError> {
        if vector.len() != self.dim {
            return Err(WordVecError::DimensionMismatch {
                expected: self.dim,
                actual: vector.len(),
            });
        }
        let replaced = match self.index.get(word) {
            Some(&row) => {
                self.data[row * self.dim..(row + 1) * self.dim].copy_from_slice(vector);
                true
            }
            None => {
                self.index.insert(word.to_owned(), self.words.len());
                self.words.push(word.to_owned());
                self.data.extend_from_slice(vector);
                false
            }
        };
        if !self.loading() {
            self.declared_count = self.words.len();
        }
        Ok(replaced)
    }

    fn loading(&self) -> bool {
        self.declared_count == usize::MAX
    }

    /// Exact entry for `word`, without fallback.
    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.index
            .get(word)
            .map(|&row| &self.data[row * self.dim..(row + 1) * self.dim])
    }

    /// Exact form first, then its transliteration; absent otherwise.
    pub fn lookup(&self, word: &str) -> Option<&[f32]> {
        self.get(word).or_else(|| {
            let folded = transliterate(word);
            if folded != word {
                self.get(&folded)
            } else {
                None
            }
        })
    }
}

/// A word that appeared more than once; the later line won.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DuplicateWord {
    pub line: usize,
    pub word: String,
}

/// Incremental parser for the text vector format, so callers can feed
/// lines from any reader.
#[derive(Debug)]
pub struct TableParser {
    table: WordVectorTable,
    declared: usize,
    rows: usize,
    keep: Option<HashSet<String>>,
    duplicates: Vec<DuplicateWord>,
}

impl TableParser {
    pub fn from_header(line: &str) -> Result<Self, WordVecError> {
        let bad = || WordVecError::MalformedHeader(line.to_owned());
        let mut parts = line.split_whitespace();
        let count: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let dim: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        if parts.next().is_some() {
            return Err(bad());
        }
        let mut table = WordVectorTable::new(dim)?;
        table.declared_count = usize::MAX;
        Ok(TableParser {
            table,
            declared: count,
            rows: 0,
            keep: None,
            duplicates: Vec::new(),
        })
    }

    /// Stores only words in `keep`; see [`keep_set`].
    pub fn with_keep(mut self, keep: HashSet<String>) -> Self {
        self.keep = Some(keep);
        self
    }

    /// Parses one vector line. `line_no` is 1-based and used in errors.
    pub fn push_line(&mut self, line_no: usize, line: &str) -> Result<(), WordVecError> {
        let line = line.trim_end_matches(['\r', '\n']);
        let mut parts = line.split(' ').filter(|s| !s.is_empty());
        let word = parts.next().ok_or(WordVecError::EmptyWord { line: line_no })?;
        self.rows += 1;
        let dim = self.table.dim;
        let wanted = self.keep.as_ref().is_none_or(|k| k.contains(word));
        if !wanted {
            let found = parts.count();
            if found != dim {
                return Err(WordVecError::Arity {
                    line: line_no,
                    expected: dim,
                    found,
                });
            }
            return Ok(());
        }
        let mut vector = Vec::with_capacity(dim);
        for tok in parts {
            let v: f32 = tok.parse().map_err(|_| WordVecError::BadNumber {
                line: line_no,
                token: tok.to_owned(),
            })?;
            if !v.is_finite() {
                return Err(WordVecError::NonFinite { line: line_no });
            }
            vector.push(v);
        }
        if vector.len() != dim {
            return Err(WordVecError::Arity {
                line: line_no,
                expected: dim,
                found: vector.len(),
            });
        }
        if self.table.insert(word, &vector)? {
            self.duplicates.push(DuplicateWord {
                line: line_no,
                word: word.to_owned(),
            });
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<LoadedTable, WordVecError> {
        if self.rows != self.declared {
            return Err(WordVecError::CountMismatch {
                declared: self.declared,
                found: self.rows,
            });
        }
        self.table.declared_count = self.declared;
        Ok(LoadedTable {
            table: self.table,
            duplicates: self.duplicates,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedTable {
    pub table: WordVectorTable,
    pub duplicates: Vec<DuplicateWord>,
}

/// Parses a whole vector file held in memory. Blank lines are skipped.
pub fn parse_vectors(text: &str) -> Result<LoadedTable, WordVecError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| WordVecError::MalformedHeader(String::new()))?;
    let mut parser = TableParser::from_header(header)?;
    for (i, line) in lines {
        parser.push_line(i + 1, line)?;
    }
    parser.finish()
}

/// Every token together with its transliteration: the table entries a
/// corpus can ever resolve to.
pub fn keep_set<'a>(tokens: impl IntoIterator<Item = &'a str>) -> HashSet<String> {
    let mut out = HashSet::new();
    for t in tokens {
        if !out.contains(t) {
            out.insert(transliterate(t));
            out.insert(t.to_owned());
        }
    }
    out
}

/// Document embedding plus how many tokens contributed. `empty` is set
/// when nothing resolved and the vector is all zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct DocVector {
    pub values: Vec<f64>,
    pub resolved: usize,
    pub empty: bool,
}

/// Mean of the vectors of all resolvable tokens.
pub fn avg_bowv(doc: &TokenizedDoc, table: &WordVectorTable) -> DocVector {
    let mut sum = vec![0.0f64; table.dim];
    let mut resolved = 0;
    for tok in &doc.tokens {
        if let Some(v) = table.lookup(tok) {
            for (s, &x) in sum.iter_mut().zip(v) {
                *s += x as f64;
            }
            resolved += 1;
        }
    }
    if resolved > 0 {
        sum.iter_mut().for_each(|s| *s /= resolved as f64);
    }
    DocVector {
        values: sum,
        resolved,
        empty: resolved == 0,
    }
}

/// `sum idf(w) vec(w) / sum idf(w)` over tokens found in both the table
/// and the vocabulary.
pub fn idf_bowv(doc: &TokenizedDoc, table: &WordVectorTable, vocab: &Vocabulary) -> DocVector {
    let mut sum = vec![0.0f64; table.dim];
    let mut weight = 0.0;
    let mut resolved = 0;
    for tok in &doc.tokens {
        let (Some(v), Some(idf)) = (table.lookup(tok), vocab.idf_of(tok)) else {
            continue;
        };
        resolved += 1;
        if idf == 0.0 {
            continue;
        }
        for (s, &x) in sum.iter_mut().zip(v) {
            *s += idf * x as f64;
        }
        weight += idf;
    }
    let empty = weight == 0.0;
    if empty {
        sum.iter_mut().for_each(|s| *s = 0.0);
    } else {
        sum.iter_mut().for_each(|s| *s /= weight);
    }
    DocVector {
        values: sum,
        resolved,
        empty,
    }
}

/// Token occurrences resolved by [`WordVectorTable::lookup`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Coverage {
    pub resolved: usize,
    pub total: usize,
}

impl Coverage {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.resolved as f64 / self.total as f64
        }
    }
}

pub fn coverage<'a>(docs: impl IntoIterator<Item = &'a TokenizedDoc>, table: &WordVectorTable) -> Coverage {
    let mut c = Coverage::default();
    for doc in docs {
        for tok in doc.tokens.iter().filter(|t| t.as_str() != PAD_TOKEN) {
            c.total += 1;
            if table.lookup(tok).is_some() {
                c.resolved += 1;
            }
        }
    }
    c
}

/// Frozen embedding rows addressed by id. Id 0 is the pad row and is
/// always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(dim: usize) -> Self {
        EmbeddingMatrix {
            dim,
            data: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of rows, pad included.
    pub fn rows(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn push(&mut self, v: &[f32]) -> u32 {
        assert_eq!(v.len(), self.dim, "embedding row length");
        self.data.extend_from_slice(v);
        (self.rows() - 1) as u32
    }

    pub fn row(&self, id: u32) -> &[f32] {
        let id = id as usize;
        &self.data[id * self.dim..(id + 1) * self.dim]
    }
}

/// A padded id sequence; positions `len..` hold the pad id 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sequence {
    pub ids: Vec<u32>,
    pub len: usize,
}

/// Maps tokens to rows of a growing [`EmbeddingMatrix`], dropping tokens
/// the table cannot resolve.
#[derive(Debug)]
pub struct SequenceEncoder<'a> {
    table: &'a WordVectorTable,
    matrix: EmbeddingMatrix,
    ids: HashMap<String, u32>,
}

impl<'a> SequenceEncoder<'a> {
    pub fn new(table: &'a WordVectorTable) -> Self {
        SequenceEncoder {
            table,
            matrix: EmbeddingMatrix::new(table.dim()),
            ids: HashMap::new(),
        }
    }

    /// Resolvable token ids of `doc`, in order, without padding.
    pub fn resolve(&mut self, doc: &TokenizedDoc) -> Vec<u32> {
        let mut out = Vec::with_capacity(doc.tokens.len());
        for tok in &doc.tokens {
            if tok == PAD_TOKEN {
                continue;
            }
            if let Some(&id) = self.ids.get(tok.as_str()) {
                out.push(id);
            } else if let Some(v) = self.table.lookup(tok) {
                let id = self.matrix.push(v);
                self.ids.insert(tok.clone(), id);
                out.push(id);
            }
        }
        out
    }

    /// Pads or truncates resolved ids to `seq_len`, keeping the prefix. A
    /// document with nothing resolvable becomes a single pad position.
    pub fn encode(&mut self, doc: &TokenizedDoc, seq_len: usize) -> Sequence {
        pad_ids(self.resolve(doc), seq_len)
    }

    pub fn into_matrix(self) -> EmbeddingMatrix {
        self.matrix
    }
}

pub fn pad_ids(mut ids: Vec<u32>, seq_len: usize) -> Sequence {
    ids.truncate(seq_len);
    let len = ids.len().max(1);
    ids.resize(seq_len, 0);
    Sequence { ids, len }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bow::NgramRange;

    fn doc(tokens: &[&str]) -> TokenizedDoc {
        TokenizedDoc::new("d", tokens.iter().map(|s| String::from(*s)).collect())
    }

    fn table(entries: &[(&str, &[f32])]) -> WordVectorTable {
        let mut t = WordVectorTable::new(entries[0].1.len()).unwrap();
        for (w, v) in entries {
            t.insert(w, v).unwrap();
        }
        t
    }

    #[test]
    fn parse_header_and_rows() {
        let loaded = parse_vectors("2 3\nbom 0.5 1 -2\nruim 1e-3 0 0\n").unwrap();
        assert_eq!(loaded.table.len(), 2);
        assert_eq!(loaded.table.dim(), 3);
        assert_eq!(loaded.table.declared_count(), 2);
        assert_eq!(loaded.table.get("bom").unwrap(), &[0.5, 1.0, -2.0]);
    }

    #[test]
    fn short_line_names_its_number() {
        let err = parse_vectors("2 3\nbom 0.5 1 -2\nruim 1 0\n").unwrap_err();
        assert_eq!(
            err,
            WordVecError::Arity {
                line: 3,
                expected: 3,
                found: 2
            }
        );
    }

    #[test]
    fn bad_header_and_count() {
        assert!(matches!(parse_vectors("x 3\n"), Err(WordVecError::MalformedHeader(_))));
        assert!(matches!(
            parse_vectors("2 3 4\n"),
            Err(WordVecError::MalformedHeader(_))
        ));
        assert_eq!(
            parse_vectors("3 1\na 1\nb 2\n").unwrap_err(),
            WordVecError::CountMismatch { declared: 3, found: 2 }
        );
        assert!(matches!(
            parse_vectors("1 1\na nan\n"),
            Err(WordVecError::NonFinite { line: 2 })
        ));
    }

    #[test]
    fn duplicates_overwrite() {
        let loaded = parse_vectors("2 1\na 1\na 2\n").unwrap();
        assert_eq!(loaded.table.get("a").unwrap(), &[2.0]);
        assert_eq!(loaded.table.len(), 1);
        assert_eq!(
            loaded.duplicates,
            vec![DuplicateWord {
                line: 3,
                word: "a".into()
            }]
        );
    }

    #[test]
    fn keep_filter_skips_rows_but_checks_arity() {
        let keep = keep_set(["café"]);
        let mut p = TableParser::from_header("3 1").unwrap().with_keep(keep);
        p.push_line(2, "cafe 1").unwrap();
        p.push_line(3, "bolo 2").unwrap();
        assert!(p.push_line(4, "chá").is_err());
    }

    #[test]
    fn lookup_fallback() {
        let t = table(&[("café", &[1.0]), ("cafe", &[2.0]), ("pao", &[3.0])]);
        assert_eq!(t.lookup("café").unwrap(), &[1.0]);
        assert_eq!(t.lookup("pão").unwrap(), &[3.0]);
        assert!(t.lookup("chá").is_none());
    }

    #[test]
    fn avg_of_opposites_is_zero() {
        let t = table(&[("aa", &[1.0, -2.0]), ("bb", &[-1.0, 2.0])]);
        let v = avg_bowv(&doc(&["aa", "bb", "zz"]), &t);
        assert_eq!(v.values, vec![0.0, 0.0]);
        assert_eq!(v.resolved, 2);
        assert!(!v.empty);
        let none = avg_bowv(&doc(&["zz"]), &t);
        assert!(none.empty);
    }

    #[test]
    fn idf_weighted_mean() {
        // df: aa=1, bb=2, cc=3 over N=3 -> idf ln3, ln1.5, 0
        let vocab = Vocabulary::from_parts(
            vec!["aa".into(), "bb".into(), "cc".into()],
            vec![1, 2, 3],
            3,
            NgramRange::UNIGRAMS,
        )
        .unwrap();
        let t = table(&[("aa", &[1.0]), ("bb", &[4.0]), ("cc", &[100.0]), ("dd", &[7.0])]);
        let v = idf_bowv(&doc(&["aa", "bb", "cc", "dd"]), &t, &vocab);
        let (wa, wb) = (libm::log(3.0), libm::log(1.5));
        let want = (wa * 1.0 + wb * 4.0) / (wa + wb);
        assert!((v.values[0] - want).abs() < 1e-12);
        let zero = idf_bowv(&doc(&["cc"]), &t, &vocab);
        assert!(zero.empty);
        assert_eq!(zero.values, vec![0.0]);
    }

    #[test]
    fn encoder_drops_unknown_and_pads() {
        let t = table(&[("aa", &[1.0]), ("bb", &[2.0])]);
        let mut enc = SequenceEncoder::new(&t);
        let s = enc.encode(&doc(&["aa", "zz", "bb", "aa"]), 5);
        assert_eq!(
            s,
            Sequence {
                ids: vec![1, 2, 1, 0, 0],
                len: 3
            }
        );
        let empty = enc.encode(&doc(&["zz"]), 3);
        assert_eq!(
            empty,
            Sequence {
                ids: vec![0, 0, 0],
                len: 1
            }
        );
        let m = enc.into_matrix();
        assert_eq!(m.rows(), 3);
        assert_eq!(m.row(0), &[0.0]);
        assert_eq!(m.row(2), &[2.0]);
    }

    #[test]
    fn coverage_counts_occurrences() {
        let t = table(&[("aa", &[1.0])]);
        let docs = [doc(&["aa", "bb"]), doc(&["aa", "aa", PAD_TOKEN])];
        let c = coverage(&docs, &t);
        assert_eq!(c, Coverage { resolved: 3, total: 4 });
        assert!((c.fraction() - 0.75).abs() < 1e-15);
    }
}
