use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use super::{io_at, FormatError};
use revembed_core::wordvec::{LoadedTable, TableParser, WordVecError};

/// Loads a `count dim` headed word-vector file. With `keep`, only those
/// words are stored (every line is still validated).
pub fn load_vectors(path: &Path, keep: Option<HashSet<String>>) -> Result<LoadedTable, FormatError> {
    let file = File::open(path).map_err(io_at(path))?;
    let loaded = read_vectors(file, keep)?;
    for dup in &loaded.duplicates {
        log::warn!("{}: line {} redefines {:?}", path.display(), dup.line, dup.word);
    }
    Ok(loaded)
}

pub fn read_vectors<R: Read>(input: R, keep: Option<HashSet<String>>) -> Result<LoadedTable, FormatError> {
    let mut reader = BufReader::new(input);
    let mut line = String::new();
    let mut line_no = 0;
    let mut parser = loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Err(WordVecError::MalformedHeader(String::new()).into());
        }
        line_no += 1;
        if !line.trim().is_empty() {
            break TableParser::from_header(line.trim())?;
        }
    };
    if let Some(keep) = keep {
        parser = parser.with_keep(keep.into_iter().collect());
    }
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        line_no += 1;
        if !line.trim().is_empty() {
            parser.push_line(line_no, &line)?;
        }
    }
    Ok(parser.finish()?)
}
