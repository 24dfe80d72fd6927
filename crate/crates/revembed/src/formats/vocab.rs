//! Vocabulary text: `#N=<n_docs>`, then `ngram<TAB>index<TAB>df` lines in
//! index order.

use std::io::{BufRead, BufReader, Read, Write};

use super::FormatError;
use revembed_core::bow::{NgramRange, Vocabulary};

pub fn write_vocabulary<W: Write>(mut w: W, vocab: &Vocabulary) -> Result<(), FormatError> {
    writeln!(w, "#N={}", vocab.n_docs())?;
    for (i, term) in vocab.terms().iter().enumerate() {
        writeln!(w, "{term}\t{i}\t{}", vocab.df(i))?;
    }
    w.flush()?;
    Ok(())
}

/// The n-gram range is recovered from the shortest and longest entries.
pub fn read_vocabulary<R: Read>(input: R) -> Result<Vocabulary, FormatError> {
    let bad = |line: usize, message: String| FormatError::Vocab { line, message };
    let mut lines = BufReader::new(input).lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    let n_docs: usize = header
        .trim_end()
        .strip_prefix("#N=")
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| bad(1, format!("expected #N=<n_docs>, found {header:?}")))?;
    let mut terms = Vec::new();
    let mut dfs = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [term, index, df] = fields[..] else {
            return Err(bad(
                line_no,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        };
        if index.parse::<usize>().ok() != Some(terms.len()) {
            return Err(bad(line_no, format!("index {index:?}, expected {}", terms.len())));
        }
        let df: u32 = df
            .parse()
            .map_err(|_| bad(line_no, format!("df {df:?} is not an integer")))?;
        terms.push(term.to_owned());
        dfs.push(df);
    }
    let order = |t: &String| t.split(' ').count();
    let min = terms.iter().map(order).min().unwrap_or(1);
    let max = terms.iter().map(order).max().unwrap_or(1);
    let range = NgramRange::new(min, max).map_err(|e| bad(0, e.to_string()))?;
    Vocabulary::from_parts(terms, dfs, n_docs, range).map_err(|e| bad(0, e.to_string()))
}
