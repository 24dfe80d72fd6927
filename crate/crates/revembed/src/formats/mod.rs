//! On-disk formats: labeled review CSV files, word-vector text files,
//! token-tensor files, model checkpoints and vocabularies.

mod checkpoint;
mod dataset;
mod tlme;
mod vectors;
mod vocab;

use std::io;
use std::path::{Path, PathBuf};

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use dataset::{load_dataset, read_dataset, write_dataset, DatasetSchema, LoadedDataset, SkippedRow};
pub use tlme::{read_token_tensor, write_token_tensor, TlmeHeader, TlmeReader, TLME_MAGIC, TLME_VERSION};
pub use vectors::{load_vectors, read_vectors};
pub use vocab::{read_vocabulary, write_vocabulary};

use revembed_core::corpus::CorpusError;
use revembed_core::neural::NeuralError;
use revembed_core::tlmagg::TlmError;
use revembed_core::wordvec::WordVecError;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Stream(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("row {row}: {message}")]
    Row { row: u64, message: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Vectors(#[from] WordVecError),
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: &'static str, found: String },
    #[error("unsupported version {found} (expected {supported})")]
    Version { found: u32, supported: u32 },
    #[error("truncated {0}")]
    Truncated(&'static str),
    #[error("{0} bytes after the declared payload")]
    TrailingData(u64),
    #[error("header declares {0} values, too many to address")]
    Oversized(String),
    #[error(transparent)]
    Tensor(#[from] TlmError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("vocabulary line {line}: {message}")]
    Vocab { line: usize, message: String },
}

pub(crate) fn io_at(path: &Path) -> impl FnOnce(io::Error) -> FormatError + '_ {
    move |source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Maps an unexpected end of input to [`FormatError::Truncated`].
pub(crate) fn eof_as(what: &'static str) -> impl Fn(io::Error) -> FormatError {
    move |e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            FormatError::Truncated(what)
        } else {
            FormatError::Stream(e)
        }
    }
}
