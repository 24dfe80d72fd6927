//! Experiment configuration: one TOML file describes the dataset, one
//! embedding family with its parameters, and the classifier head.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::formats::DatasetSchema;
use revembed_core::bow::{NgramRange, SelectionMethod};
use revembed_core::neural::{Pooling, TrainConfig};
use revembed_core::tlmagg::AggregationMode;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{field}: {path} does not exist")]
    MissingPath { field: &'static str, path: PathBuf },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

fn invalid(message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(message.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    RocAuc,
    Accuracy,
    F1,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::RocAuc, Metric::Accuracy, Metric::F1];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::RocAuc => "roc_auc",
            Metric::Accuracy => "accuracy",
            Metric::F1 => "f1",
        }
    }

    pub fn parse(s: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.as_str() == s)
    }
}

fn all_metrics() -> Vec<Metric> {
    Metric::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Parallel fold jobs; `REVEMBED_WORKERS` overrides it.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "all_metrics")]
    pub metrics: Vec<Metric>,
    pub dataset: DatasetConfig,
    pub pipeline: Pipeline,
    /// Logistic-regression head for the feature families.
    #[serde(default)]
    pub head: HeadConfig,
    /// Write the fitted parameters of every fold next to the reports.
    #[serde(default)]
    pub checkpoints: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeadConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for HeadConfig {
    fn default() -> Self {
        HeadConfig {
            learning_rate: 1e-2,
            epochs: 10,
            batch_size: 128,
        }
    }
}

impl HeadConfig {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            dropout: 0.0,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
    #[serde(default)]
    pub schema: DatasetSchema,
    /// Derive stratified folds from the run seed instead of reading them.
    #[serde(default)]
    pub assign_folds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Pipeline {
    Tfidf(BowParams),
    Lsa(LsaParams),
    AvgBowv(VectorParams),
    IdfBowv(IdfParams),
    Cnn(CnnParams),
    Lstm(LstmParams),
    TlmFeature(TlmParams),
}

impl Pipeline {
    pub fn family(&self) -> &'static str {
        match self {
            Pipeline::Tfidf(_) => "tfidf",
            Pipeline::Lsa(_) => "lsa",
            Pipeline::AvgBowv(_) => "avg_bowv",
            Pipeline::IdfBowv(_) => "idf_bowv",
            Pipeline::Cnn(_) => "cnn",
            Pipeline::Lstm(_) => "lstm",
            Pipeline::TlmFeature(_) => "tlm_feature",
        }
    }

    pub fn is_neural(&self) -> bool {
        matches!(self, Pipeline::Cnn(_) | Pipeline::Lstm(_))
    }
}

fn one() -> usize {
    1
}

fn five() -> u64 {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BowParams {
    #[serde(default = "one")]
    pub ngram_min: usize,
    #[serde(default = "one")]
    pub ngram_max: usize,
    #[serde(default = "five")]
    pub min_count: u64,
    #[serde(default = "default_selection")]
    pub selection: SelectionMethod,
    /// Entries kept after selection; absent keeps the whole vocabulary.
    #[serde(default)]
    pub vocab_size: Option<usize>,
    /// One word per line; the bundled Portuguese list when absent.
    #[serde(default)]
    pub stopwords: Option<PathBuf>,
}

fn default_selection() -> SelectionMethod {
    SelectionMethod::Frequency
}

impl Default for BowParams {
    fn default() -> Self {
        BowParams {
            ngram_min: 1,
            ngram_max: 1,
            min_count: 5,
            selection: SelectionMethod::Frequency,
            vocab_size: None,
            stopwords: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LsaParams {
    pub components: usize,
    #[serde(default = "one")]
    pub ngram_min: usize,
    #[serde(default = "one")]
    pub ngram_max: usize,
    #[serde(default = "five")]
    pub min_count: u64,
    #[serde(default = "default_selection")]
    pub selection: SelectionMethod,
    #[serde(default)]
    pub vocab_size: Option<usize>,
    #[serde(default)]
    pub stopwords: Option<PathBuf>,
}

impl LsaParams {
    pub fn bow(&self) -> BowParams {
        BowParams {
            ngram_min: self.ngram_min,
            ngram_max: self.ngram_max,
            min_count: self.min_count,
            selection: self.selection,
            vocab_size: self.vocab_size,
            stopwords: self.stopwords.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorParams {
    pub vectors: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdfParams {
    pub vectors: PathBuf,
    /// Minimum corpus count for a unigram to receive an idf weight.
    #[serde(default = "one_u64")]
    pub min_count: u64,
}

fn one_u64() -> u64 {
    1
}

/// Hyperparameter grid and schedule shared by the neural families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuralTraining {
    #[serde(default = "zero_dropout")]
    pub dropouts: Vec<f64>,
    #[serde(default = "default_lrs")]
    pub learning_rates: Vec<f64>,
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    /// Pick the epoch count with the best validation ROC-AUC.
    #[serde(default)]
    pub select_epochs: bool,
    /// Padded length; the percentile of training lengths when absent.
    #[serde(default)]
    pub seq_len: Option<usize>,
    #[serde(default = "default_percentile")]
    pub length_percentile: f64,
}

fn zero_dropout() -> Vec<f64> {
    vec![0.0]
}

fn default_lrs() -> Vec<f64> {
    vec![1e-3]
}

fn default_batch() -> usize {
    128
}

fn default_percentile() -> f64 {
    90.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CnnParams {
    pub vectors: PathBuf,
    pub filter_sizes: Vec<usize>,
    pub feature_maps: usize,
    pub training: NeuralTraining,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LstmParams {
    pub vectors: PathBuf,
    #[serde(default = "one")]
    pub layers: usize,
    pub hidden_size: usize,
    pub pooling: Pooling,
    pub training: NeuralTraining,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TlmParams {
    /// Token tensor whose documents follow the dataset row order.
    pub tensor: PathBuf,
    pub mode: AggregationMode,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_owned(),
            message: e.to_string(),
        })
    }

    /// Reads, parses and validates a config file. Relative paths are
    /// taken from the config file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        let config = Self::from_toml(&text, path)?;
        config.validate(path.parent().unwrap_or(Path::new("")))?;
        Ok(config)
    }

    /// Every input file with the config field naming it.
    pub fn input_paths(&self) -> Vec<(&'static str, &Path)> {
        let mut out = vec![("dataset.path", self.dataset.path.as_path())];
        match &self.pipeline {
            Pipeline::Tfidf(BowParams { stopwords, .. }) | Pipeline::Lsa(LsaParams { stopwords, .. }) => {
                if let Some(s) = stopwords {
                    out.push(("pipeline.stopwords", s.as_path()));
                }
            }
            Pipeline::AvgBowv(p) => out.push(("pipeline.vectors", p.vectors.as_path())),
            Pipeline::IdfBowv(p) => out.push(("pipeline.vectors", p.vectors.as_path())),
            Pipeline::Cnn(p) => out.push(("pipeline.vectors", p.vectors.as_path())),
            Pipeline::Lstm(p) => out.push(("pipeline.vectors", p.vectors.as_path())),
            Pipeline::TlmFeature(p) => out.push(("pipeline.tensor", p.tensor.as_path())),
        }
        out
    }

    /// Schema and range checks, then existence of every input path
    /// resolved against `base`.
    pub fn validate(&self, base: &Path) -> Result<(), ConfigError> {
        if self.name.trim().is_empty() {
            return Err(invalid("name must not be empty"));
        }
        if self.name.contains([',', '\n', '\r', '"']) {
            return Err(invalid("name must not contain commas, quotes or line breaks"));
        }
        if self.metrics.is_empty() {
            return Err(invalid("metrics must name at least one of roc_auc, accuracy, f1"));
        }
        if self.workers == Some(0) {
            return Err(invalid("workers must be positive"));
        }
        if self.dataset.schema.folds < 2 {
            return Err(invalid("dataset.schema.folds must be at least 2"));
        }
        if self.head.epochs == 0 {
            return Err(invalid("head.epochs must be positive"));
        }
        self.head
            .train_config(0)
            .validate()
            .map_err(|e| invalid(format!("head: {e}")))?;
        match &self.pipeline {
            Pipeline::Tfidf(b) => check_bow(b)?,
            Pipeline::Lsa(p) => {
                check_bow(&p.bow())?;
                if p.components == 0 {
                    return Err(invalid("pipeline.components must be positive"));
                }
                if p.vocab_size.is_some_and(|v| v < p.components) {
                    return Err(invalid("pipeline.components exceeds pipeline.vocab_size"));
                }
            }
            Pipeline::AvgBowv(_) => {}
            Pipeline::IdfBowv(p) => {
                if p.min_count == 0 {
                    return Err(invalid("pipeline.min_count must be at least 1"));
                }
            }
            Pipeline::Cnn(p) => {
                if p.filter_sizes.is_empty() || p.filter_sizes.contains(&0) {
                    return Err(invalid("pipeline.filter_sizes must list positive widths"));
                }
                if p.feature_maps == 0 {
                    return Err(invalid("pipeline.feature_maps must be positive"));
                }
                check_training(&p.training)?;
                let widest = p.filter_sizes.iter().copied().max().unwrap_or(1);
                if p.training.seq_len.is_some_and(|s| s < widest) {
                    return Err(invalid("pipeline.training.seq_len is shorter than the widest filter"));
                }
            }
            Pipeline::Lstm(p) => {
                if !(1..=2).contains(&p.layers) {
                    return Err(invalid("pipeline.layers must be 1 or 2"));
                }
                if p.hidden_size == 0 {
                    return Err(invalid("pipeline.hidden_size must be positive"));
                }
                check_training(&p.training)?;
            }
            Pipeline::TlmFeature(_) => {}
        }
        for (field, path) in self.input_paths() {
            let resolved = base.join(path);
            if !resolved.is_file() {
                return Err(ConfigError::MissingPath { field, path: resolved });
            }
        }
        Ok(())
    }

    /// Copy with every input path joined onto `base`.
    pub fn resolved(&self, base: &Path) -> ExperimentConfig {
        let mut c = self.clone();
        let join = |p: &mut PathBuf| *p = base.join(&*p);
        join(&mut c.dataset.path);
        match &mut c.pipeline {
            Pipeline::Tfidf(BowParams { stopwords, .. }) | Pipeline::Lsa(LsaParams { stopwords, .. }) => {
                if let Some(s) = stopwords {
                    join(s);
                }
            }
            Pipeline::AvgBowv(p) => join(&mut p.vectors),
            Pipeline::IdfBowv(p) => join(&mut p.vectors),
            Pipeline::Cnn(p) => join(&mut p.vectors),
            Pipeline::Lstm(p) => join(&mut p.vectors),
            Pipeline::TlmFeature(p) => join(&mut p.tensor),
        }
        c
    }
}

fn check_bow(b: &BowParams) -> Result<(), ConfigError> {
    NgramRange::new(b.ngram_min, b.ngram_max).map_err(|e| invalid(format!("pipeline: {e}")))?;
    if b.min_count == 0 {
        return Err(invalid("pipeline.min_count must be at least 1"));
    }
    if b.vocab_size == Some(0) {
        return Err(invalid("pipeline.vocab_size must be positive"));
    }
    Ok(())
}

fn check_training(t: &NeuralTraining) -> Result<(), ConfigError> {
    if t.dropouts.is_empty() || t.learning_rates.is_empty() {
        return Err(invalid("pipeline.training grids must be non-empty"));
    }
    if let Some(d) = t.dropouts.iter().find(|d| !(0.0..1.0).contains(*d)) {
        return Err(invalid(format!("pipeline.training dropout {d} outside [0, 1)")));
    }
    if let Some(lr) = t.learning_rates.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(invalid(format!(
            "pipeline.training learning rate {lr} must be positive"
        )));
    }
    if t.epochs == 0 || t.batch_size == 0 {
        return Err(invalid("pipeline.training epochs and batch_size must be positive"));
    }
    if t.seq_len == Some(0) {
        return Err(invalid("pipeline.training.seq_len must be positive"));
    }
    if !(t.length_percentile > 0.0 && t.length_percentile <= 100.0) {
        return Err(invalid("pipeline.training.length_percentile must lie in (0, 100]"));
    }
    Ok(())
}
