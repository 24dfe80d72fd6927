//! Cleaning, transliteration, tokenization and padding passes.
//!
//! Each pass is a pure function; [`Preprocessor`] chains them according
//! to a [`PrepConfig`].

use alloc::borrow::ToOwned;
use alloc::string::String;
use alloc::vec::Vec;

use hashbrown::HashSet;
use serde::{Deserialize, Serialize};

/// Shortest and longest accepted token, counted in letters.
pub const MIN_TOKEN_LETTERS: usize = 2;
pub const MAX_TOKEN_LETTERS: usize = 30;

/// Token used to fill padded sequences.
pub const PAD_TOKEN: &str = "<pad>";

const BUNDLED_STOPWORDS: &str = include_str!("../data/stopwords_pt.txt");

const URL_PREFIXES: [&str; 3] = ["http://", "https://", "www."];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PrepError {
    #[error("cannot take a length percentile of an empty corpus")]
    EmptyCorpus,
    #[error("percentile must lie in (0, 100], got {0}")]
    InvalidPercentile(f64),
    #[error("pad length must be positive")]
    ZeroPadLength,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedDoc {
    pub tokens: Vec<String>,
    pub source_id: String,
}

impl TokenizedDoc {
    pub fn new(source_id: impl Into<String>, tokens: Vec<String>) -> Self {
        TokenizedDoc {
            tokens,
            source_id: source_id.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Which end of an over-long document survives truncation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Keep {
    #[default]
    Prefix,
    Suffix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrepConfig {
    pub lowercase: bool,
    pub strip_urls_special: bool,
    pub transliterate: bool,
    pub stopword_removal: bool,
    pub pad_length: Option<usize>,
}

impl PrepConfig {
    /// TF-IDF / LSA pipelines: accents folded and stop-words dropped.
    pub fn bag_of_words() -> Self {
        PrepConfig {
            lowercase: true,
            strip_urls_special: true,
            transliterate: true,
            stopword_removal: true,
            pad_length: None,
        }
    }

    /// Word-vector pipelines keep accents; transliteration happens only
    /// as a lookup fallback.
    pub fn word_vectors() -> Self {
        PrepConfig {
            lowercase: true,
            strip_urls_special: true,
            transliterate: false,
            stopword_removal: false,
            pad_length: None,
        }
    }
}

fn starts_with_url(rest: &str) -> bool {
    URL_PREFIXES
        .iter()
        .any(|p| rest.len() >= p.len() && rest.as_bytes()[..p.len()].eq_ignore_ascii_case(p.as_bytes()))
}

fn strip_urls(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut iter = text.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        if starts_with_url(&text[i..]) {
            while let Some(&(_, next)) = iter.peek() {
                if next.is_whitespace() {
                    break;
                }
                iter.next();
            }
            continue;
        }
        out.push(c);
    }
    out
}

/// Lowercases (when configured), removes URLs and every character that
/// is neither a letter nor whitespace, then collapses whitespace runs.
pub fn clean_text(text: &str, config: &PrepConfig) -> String {
    let mut work = if config.lowercase {
        text.to_lowercase()
    } else {
        text.to_owned()
    };
    if config.strip_urls_special {
        work = strip_urls(&work);
        work.retain(|c| c.is_alphabetic() || c.is_whitespace());
    }
    let mut out = String::with_capacity(work.len());
    for word in work.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

fn fold_char(c: char) -> char {
    match c {
        'á' | 'à' | 'â' | 'ã' | 'ä' => 'a',
        'é' | 'è' | 'ê' | 'ë' => 'e',
        'í' | 'ì' | 'î' | 'ï' => 'i',
        'ó' | 'ò' | 'ô' | 'õ' | 'ö' => 'o',
        'ú' | 'ù' | 'û' | 'ü' => 'u',
        'ç' => 'c',
        'Á' | 'À' | 'Â' | 'Ã' | 'Ä' => 'A',
        'É' | 'È' | 'Ê' | 'Ë' => 'E',
        'Í' | 'Ì' | 'Î' | 'Ï' => 'I',
        'Ó' | 'Ò' | 'Ô' | 'Õ' | 'Ö' => 'O',
        'Ú' | 'Ù' | 'Û' | 'Ü' => 'U',
        'Ç' => 'C',
        other => other,
    }
}

/// Maps Portuguese diacritics to their base Latin letter.
pub fn transliterate(text: &str) -> String {
    text.chars().map(fold_char).collect()
}

fn is_valid_token(token: &str) -> bool {
    let mut letters = 0;
    for c in token.chars() {
        if !c.is_alphabetic() {
            return false;
        }
        letters += 1;
        if letters > MAX_TOKEN_LETTERS {
            return false;
        }
    }
    letters >= MIN_TOKEN_LETTERS
}

/// Whitespace tokenization keeping only all-letter tokens of 2 to 30
/// letters.
pub fn tokenize(source_id: &str, text: &str) -> TokenizedDoc {
    let tokens = text
        .split_whitespace()
        .filter(|t| is_valid_token(t))
        .map(str::to_owned)
        .collect();
    TokenizedDoc::new(source_id, tokens)
}

pub fn pad_or_truncate(doc: &TokenizedDoc, length: usize, pad_token: &str) -> TokenizedDoc {
    pad_or_truncate_keep(doc, length, pad_token, Keep::Prefix)
}

/// Right-pads with `pad_token` or truncates to exactly `length` tokens.
pub fn pad_or_truncate_keep(doc: &TokenizedDoc, length: usize, pad_token: &str, keep: Keep) -> TokenizedDoc {
    let n = doc.tokens.len();
    let mut tokens: Vec<String> = if n > length {
        match keep {
            Keep::Prefix => doc.tokens[..length].to_vec(),
            Keep::Suffix => doc.tokens[n - length..].to_vec(),
        }
    } else {
        doc.tokens.clone()
    };
    tokens.resize(length, pad_token.to_owned());
    TokenizedDoc::new(doc.source_id.clone(), tokens)
}

/// Smallest length `L` such that at least `q` percent of the lengths are
/// `<= L`.
pub fn percentile_of_lengths(lengths: &[usize], q: f64) -> Result<usize, PrepError> {
    if lengths.is_empty() {
        return Err(PrepError::EmptyCorpus);
    }
    if !(q > 0.0 && q <= 100.0) {
        return Err(PrepError::InvalidPercentile(q));
    }
    let mut sorted = lengths.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    // guard against q * n / 100 landing a hair above an integer
    let needed = crate::math::ceil(q * n as f64 / 100.0 - 1e-9).max(1.0) as usize;
    Ok(sorted[needed.min(n) - 1])
}

pub fn percentile_length(corpus: &[TokenizedDoc], q: f64) -> Result<usize, PrepError> {
    let lengths: Vec<usize> = corpus.iter().map(TokenizedDoc::len).collect();
    percentile_of_lengths(&lengths, q)
}

/// A stop-word set. Lookups match both the listed form and its
/// transliteration so the set works before and after accent folding.
#[derive(Debug, Clone, Default)]
pub struct StopWords {
    words: HashSet<String>,
}

impl StopWords {
    /// The Portuguese list shipped in `data/stopwords_pt.txt`.
    pub fn bundled() -> Self {
        Self::from_lines(BUNDLED_STOPWORDS)
    }

    /// One word per line; blank lines and `#` comments are skipped.
    pub fn from_lines(text: &str) -> Self {
        let mut words = HashSet::new();
        for line in text.lines() {
            let w = line.trim();
            if w.is_empty() || w.starts_with('#') {
                continue;
            }
            let lower = w.to_lowercase();
            words.insert(transliterate(&lower));
            words.insert(lower);
        }
        StopWords { words }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Applies the configured passes in order: clean, transliterate,
/// tokenize, drop stop-words, pad.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    config: PrepConfig,
    stopwords: StopWords,
    keep: Keep,
}

impl Preprocessor {
    pub fn new(config: PrepConfig, stopwords: StopWords) -> Result<Self, PrepError> {
        if config.pad_length == Some(0) {
            return Err(PrepError::ZeroPadLength);
        }
        Ok(Preprocessor {
            config,
            stopwords,
            keep: Keep::Prefix,
        })
    }

    pub fn with_truncation(mut self, keep: Keep) -> Self {
        self.keep = keep;
        self
    }

    pub fn config(&self) -> &PrepConfig {
        &self.config
    }

    pub fn prepare(&self, source_id: &str, text: &str) -> TokenizedDoc {
        let mut cleaned = clean_text(text, &self.config);
        if self.config.transliterate {
            cleaned = transliterate(&cleaned);
        }
        let mut doc = tokenize(source_id, &cleaned);
        if self.config.stopword_removal {
            doc.tokens.retain(|t| !self.stopwords.contains(t));
        }
        match self.config.pad_length {
            Some(len) => pad_or_truncate_keep(&doc, len, PAD_TOKEN, self.keep),
            None => doc,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(doc: &TokenizedDoc) -> Vec<&str> {
        doc.tokens.iter().map(String::as_str).collect()
    }

    fn doc(tokens: &[&str]) -> TokenizedDoc {
        TokenizedDoc::new("x", tokens.iter().map(|s| String::from(*s)).collect())
    }

    #[test]
    fn clean_examples() {
        let cfg = PrepConfig::word_vectors();
        assert_eq!(clean_text("OLÁ Mundo", &cfg), "olá mundo");
        assert_eq!(clean_text("veja http://a.b/x agora!!!", &cfg), "veja agora");
        assert_eq!(clean_text("já limpo", &cfg), "já limpo");
        assert_eq!(clean_text("ver WWW.Loja.com.br  e https://x.y", &cfg), "ver e");
    }

    #[test]
    fn clean_without_lowercase_keeps_case() {
        let cfg = PrepConfig {
            lowercase: false,
            ..PrepConfig::word_vectors()
        };
        assert_eq!(clean_text("Bom  Dia, 123", &cfg), "Bom Dia");
    }

    #[test]
    fn transliterate_examples() {
        assert_eq!(transliterate("ação"), "acao");
        assert_eq!(transliterate("café ótimo"), "cafe otimo");
        assert_eq!(transliterate("sem acento"), "sem acento");
        assert_eq!(transliterate("AÇÃO Êxito"), "ACAO Exito");
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(toks(&tokenize("x", "eu gostei muito")), ["eu", "gostei", "muito"]);
        assert_eq!(toks(&tokenize("x", "a b ok")), ["ok"]);
        let long: String = core::iter::repeat('a').take(31).collect();
        assert!(tokenize("x", &long).is_empty());
        let thirty: String = core::iter::repeat('é').take(30).collect();
        assert_eq!(tokenize("x", &thirty).len(), 1);
    }

    #[test]
    fn pad_examples() {
        assert_eq!(toks(&pad_or_truncate(&doc(&["bom"]), 3, "PAD")), ["bom", "PAD", "PAD"]);
        assert_eq!(
            toks(&pad_or_truncate(&doc(&["a1", "a2", "a3", "a4"]), 2, "PAD")),
            ["a1", "a2"]
        );
        assert_eq!(
            toks(&pad_or_truncate_keep(
                &doc(&["a1", "a2", "a3", "a4"]),
                2,
                "PAD",
                Keep::Suffix
            )),
            ["a3", "a4"]
        );
        let same = doc(&["x1", "x2"]);
        assert_eq!(pad_or_truncate(&same, 2, "PAD"), same);
    }

    #[test]
    fn percentile_examples() {
        // sort-and-index oracle: the ceil(q*n/100)-th smallest length
        let oracle = |lengths: &[usize], q: f64| {
            let mut s = lengths.to_vec();
            s.sort();
            let mut i = 0;
            while (i + 1) as f64 * 100.0 < q * s.len() as f64 {
                i += 1;
            }
            s[i]
        };
        let one_to_ten: Vec<usize> = (1..=10).collect();
        assert_eq!(oracle(&one_to_ten, 90.0), 9);
        assert_eq!(percentile_of_lengths(&one_to_ten, 90.0).unwrap(), 9);
        assert_eq!(oracle(&[2, 4], 50.0), 2);
        assert_eq!(percentile_of_lengths(&[2, 4], 50.0).unwrap(), 2);
        for q in [1.0, 33.3, 50.0, 75.0, 99.0, 100.0] {
            assert_eq!(percentile_of_lengths(&[7; 13], q).unwrap(), 7);
        }
        assert_eq!(percentile_of_lengths(&[], 90.0), Err(PrepError::EmptyCorpus));
        assert_eq!(percentile_of_lengths(&[1], 0.0), Err(PrepError::InvalidPercentile(0.0)));
    }

    #[test]
    fn bundled_stopwords_match_folded_forms() {
        let sw = StopWords::bundled();
        assert!(sw.contains("de"));
        assert!(sw.contains("você"));
        assert!(sw.contains("voce"));
        assert!(!sw.contains("produto"));
    }

    #[test]
    fn bag_of_words_pipeline() {
        let pre = Preprocessor::new(PrepConfig::bag_of_words(), StopWords::bundled()).unwrap();
        let out = pre.prepare("1", "O produto chegou no prazo! Recomendo a loja: www.loja.com");
        assert_eq!(toks(&out), ["produto", "chegou", "prazo", "recomendo", "loja"]);
        let out = pre.prepare("2", "Solicitei devolução!");
        assert_eq!(toks(&out), ["solicitei", "devolucao"]);
    }

    #[test]
    fn pipeline_pads_when_configured() {
        let cfg = PrepConfig {
            pad_length: Some(4),
            ..PrepConfig::word_vectors()
        };
        let pre = Preprocessor::new(cfg, StopWords::default()).unwrap();
        assert_eq!(
            toks(&pre.prepare("1", "muito bom")),
            ["muito", "bom", PAD_TOKEN, PAD_TOKEN]
        );
        let bad = PrepConfig {
            pad_length: Some(0),
            ..cfg
        };
        assert_eq!(
            Preprocessor::new(bad, StopWords::default()).unwrap_err(),
            PrepError::ZeroPadLength
        );
    }

    fn non_space_count(s: &str) -> usize {
        s.chars().filter(|c| !c.is_whitespace()).count()
    }

    proptest! {
        #[test]
        fn transliterate_is_idempotent(s in "\\PC{0,40}") {
            let once = transliterate(&s);
            prop_assert_eq!(transliterate(&once), once);
        }

        #[test]
        fn tokens_respect_letter_rule(s in "[\\PC\\s]{0,120}") {
            for t in tokenize("p", &s).tokens {
                let n = t.chars().count();
                prop_assert!((MIN_TOKEN_LETTERS..=MAX_TOKEN_LETTERS).contains(&n));
                prop_assert!(t.chars().all(char::is_alphabetic));
            }
        }

        #[test]
        fn pad_length_is_exact(tokens in proptest::collection::vec("[a-z]{2,6}", 0..20), len in 1usize..25) {
            let d = TokenizedDoc::new("p", tokens);
            prop_assert_eq!(pad_or_truncate(&d, len, PAD_TOKEN).len(), len);
        }

        #[test]
        fn clean_never_grows_non_space(s in "[\\PC\\s]{0,80}", lower in any::<bool>()) {
            let cfg = PrepConfig { lowercase: lower, ..PrepConfig::word_vectors() };
            prop_assert!(non_space_count(&clean_text(&s, &cfg)) <= non_space_count(&s));
        }
    }
}
