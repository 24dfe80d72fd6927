//! Labeled review corpora with pre-defined splits and fold assignments.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use hashbrown::HashSet;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

/// Default number of cross-validation folds.
pub const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("empty dataset")]
    Empty,
    #[error("duplicate document id {0:?}")]
    DuplicateId(String),
    #[error("document {id:?}: text is empty after trimming")]
    EmptyText { id: String },
    #[error("document {id:?}: fold {fold} is out of range for k = {k}")]
    FoldOutOfRange { id: String, fold: usize, k: usize },
    #[error("fold {fold} out of range for k = {k}")]
    FoldIndex { fold: usize, k: usize },
    #[error("fold {0} has no documents")]
    EmptyFold(usize),
    #[error("document {0:?} has no fold assignment")]
    Unassigned(String),
    #[error("fold count must be at least 2, got {0}")]
    InvalidK(usize),
}

/// Binary sentiment label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    Negative = 0,
    Positive = 1,
}

impl Polarity {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Polarity::Negative),
            1 => Some(Polarity::Positive),
            _ => None,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Polarity::Positive
    }

    pub fn as_f64(self) -> f64 {
        self as u8 as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    /// Parses the split names found in public review releases.
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" | "training" => Some(Split::Train),
            "validation" | "valid" | "val" | "dev" => Some(Split::Validation),
            "test" | "testing" => Some(Split::Test),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub polarity: Polarity,
    pub fold: Option<usize>,
    pub split: Option<Split>,
}

/// An immutable, validated collection of documents.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    k: usize,
    documents: Vec<Document>,
}

impl Dataset {
    /// Validates and wraps `documents`. Ids must be unique, texts
    /// non-blank and fold indices below `k`. When every document carries
    /// a fold, every fold must be non-empty.
    pub fn new(name: impl Into<String>, k: usize, documents: Vec<Document>) -> Result<Self, CorpusError> {
        if k < 2 {
            return Err(CorpusError::InvalidK(k));
        }
        if documents.is_empty() {
            return Err(CorpusError::Empty);
        }
        {
            let mut seen = HashSet::with_capacity(documents.len());
            for doc in &documents {
                if !seen.insert(doc.id.as_str()) {
                    return Err(CorpusError::DuplicateId(doc.id.clone()));
                }
                if doc.text.trim().is_empty() {
                    return Err(CorpusError::EmptyText { id: doc.id.clone() });
                }
                if let Some(fold) = doc.fold {
                    if fold >= k {
                        return Err(CorpusError::FoldOutOfRange {
                            id: doc.id.clone(),
                            fold,
                            k,
                        });
                    }
                }
            }
        }
        let dataset = Dataset {
            name: name.into(),
            k,
            documents,
        };
        if dataset.has_folds() {
            let sizes = dataset.fold_sizes();
            if let Some(empty) = sizes.iter().position(|&n| n == 0) {
                return Err(CorpusError::EmptyFold(empty));
            }
        }
        Ok(dataset)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// True when every document has a fold assignment.
    pub fn has_folds(&self) -> bool {
        self.documents.iter().all(|d| d.fold.is_some())
    }

    pub fn has_splits(&self) -> bool {
        self.documents.iter().all(|d| d.split.is_some())
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = alloc::vec![0; self.k];
        for fold in self.documents.iter().filter_map(|d| d.fold) {
            sizes[fold] += 1;
        }
        sizes
    }

    /// `(negative, positive)` document counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.documents.iter().filter(|d| d.polarity.is_positive()).count();
        (self.documents.len() - pos, pos)
    }

    pub fn split(&self, split: Split) -> Vec<&Document> {
        self.documents.iter().filter(|d| d.split == Some(split)).collect()
    }

    /// Partitions the dataset into the documents outside `fold` (train)
    /// and inside it (test). Document order is preserved in both halves.
    pub fn fold_view(&self, fold: usize) -> Result<FoldView<'_>, CorpusError> {
        if fold >= self.k {
            return Err(CorpusError::FoldIndex { fold, k: self.k });
        }
        let mut train = Vec::new();
        let mut test = Vec::new();
        for doc in &self.documents {
            match doc.fold {
                None => return Err(CorpusError::Unassigned(doc.id.clone())),
                Some(f) if f == fold => test.push(doc),
                Some(_) => train.push(doc),
            }
        }
        Ok(FoldView { fold, train, test })
    }

    /// Replaces fold assignments with a stratified modular assignment
    /// over a seeded shuffle: documents are shuffled, grouped by class,
    /// and dealt round-robin into `k` folds.
    pub fn with_assigned_folds(&self, k: usize, seed: u64) -> Result<Dataset, CorpusError> {
        if k < 2 {
            return Err(CorpusError::InvalidK(k));
        }
        if self.documents.len() < k {
            return Err(CorpusError::EmptyFold(self.documents.len()));
        }
        let mut order: Vec<usize> = (0..self.documents.len()).collect();
        let mut rng = crate::rng::seeded(seed);
        order.shuffle(&mut rng);
        // stable sort keeps the shuffled order inside each class
        order.sort_by_key(|&i| self.documents[i].polarity);
        let mut documents = self.documents.clone();
        for (slot, &i) in order.iter().enumerate() {
            documents[i].fold = Some(slot % k);
        }
        Dataset::new(self.name.clone(), k, documents)
    }
}

/// Borrowed train/test partition for one fold.
#[derive(Debug, Clone)]
pub struct FoldView<'a> {
    pub fold: usize,
    pub train: Vec<&'a Document>,
    pub test: Vec<&'a Document>,
}
