//! Per-family feature construction and per-fold model fitting. Anything
//! that learns from data (vocabularies, selection, LSA, sequence length,
//! network weights, the head) sees only the training documents of the
//! fold it serves.

use std::collections::HashSet;
use std::fmt::Display;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::sync::Arc;

use crate::config::{BowParams, ExperimentConfig, HeadConfig, NeuralTraining, Pipeline};
use crate::formats::{load_vectors, FormatError, TlmeReader};
use revembed_core::bow::{
    build_vocabulary, lsa_fit_with, lsa_transform, select_features, tfidf_transform, LsaOptions, NgramRange,
    SparseVector,
};
use revembed_core::corpus::{Dataset, Polarity, Split};
use revembed_core::neural::{
    grid_points, grid_search, predict, train, Cnn, CnnConfig, Features, GridPoint, LogisticRegression, Lstm,
    LstmConfig, Model, NeuralError, ParamSet, TrainConfig,
};
use revembed_core::textprep::{percentile_of_lengths, PrepConfig, Preprocessor, StopWords, TokenizedDoc};
use revembed_core::tlmagg::{aggregate_doc, AggregationMode, DocTokens};
use revembed_core::wordvec::{
    avg_bowv, coverage, idf_bowv, keep_set, pad_ids, EmbeddingMatrix, Sequence, SequenceEncoder, WordVectorTable,
};

/// Whole-dataset preprocessing that involves no fitting.
#[derive(Debug)]
pub enum Prepared {
    Bow {
        tokens: Vec<TokenizedDoc>,
        stopwords: StopWords,
    },
    Vectors {
        tokens: Vec<TokenizedDoc>,
        table: WordVectorTable,
    },
    Sequences {
        ids: Vec<Vec<u32>>,
        matrix: Arc<EmbeddingMatrix>,
    },
    Aggregated(Vec<Vec<f64>>),
}

/// Test-fold probabilities plus what was fitted to produce them.
#[derive(Debug, Clone)]
pub struct FoldFit {
    pub probabilities: Vec<f64>,
    /// Chosen hyperparameters and sizes, for the summary.
    pub note: String,
    pub params: ParamSet,
}

fn text<E: Display>(e: E) -> String {
    e.to_string()
}

pub fn load_stopwords(path: Option<&Path>) -> Result<StopWords, FormatError> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(crate::formats::io_at(p))?;
            Ok(StopWords::from_lines(&text))
        }
        None => Ok(StopWords::bundled()),
    }
}

pub fn tokenize_all(dataset: &Dataset, config: PrepConfig, stopwords: StopWords) -> Vec<TokenizedDoc> {
    let prep = Preprocessor::new(config, stopwords).expect("preset configurations have no pad length");
    dataset
        .documents()
        .iter()
        .map(|d| prep.prepare(&d.id, &d.text))
        .collect()
}

/// Loads only the table rows the corpus can resolve to.
pub fn load_table_for(path: &Path, tokens: &[TokenizedDoc]) -> Result<WordVectorTable, FormatError> {
    let keep: HashSet<String> = keep_set(tokens.iter().flat_map(|d| d.tokens.iter().map(String::as_str)))
        .into_iter()
        .collect();
    let table = load_vectors(path, Some(keep))?.table;
    let cov = coverage(tokens, &table);
    log::info!(
        "{}: {} of {} token occurrences resolved ({:.1}%)",
        path.display(),
        cov.resolved,
        cov.total,
        100.0 * cov.fraction()
    );
    Ok(table)
}

/// Streams a token tensor and aggregates every document.
pub fn aggregate_file(path: &Path, mode: AggregationMode) -> Result<Vec<Vec<f64>>, FormatError> {
    let file = File::open(path).map_err(crate::formats::io_at(path))?;
    let mut reader = TlmeReader::new(BufReader::new(file))?;
    let dim = reader.header().dim as usize;
    let lengths = reader.real_lengths().to_vec();
    let mut out = Vec::with_capacity(lengths.len());
    let mut flagged = 0;
    while let Some(values) = reader.next_document()? {
        let agg = aggregate_doc(DocTokens::new(&values, lengths[out.len()] as usize, dim)?, mode);
        flagged += agg.flagged as usize;
        out.push(agg.values);
    }
    reader.finish()?;
    if flagged > 0 {
        log::warn!(
            "{}: {flagged} single-token documents have no remainder statistics",
            path.display()
        );
    }
    Ok(out)
}

impl Prepared {
    /// Input paths in `config` must already be resolved.
    pub fn load(config: &ExperimentConfig, dataset: &Dataset) -> Result<Prepared, FormatError> {
        Ok(match &config.pipeline {
            Pipeline::Tfidf(b) => Self::bow(dataset, b)?,
            Pipeline::Lsa(p) => Self::bow(dataset, &p.bow())?,
            Pipeline::AvgBowv(p) => Self::vectors(dataset, &p.vectors)?,
            Pipeline::IdfBowv(p) => Self::vectors(dataset, &p.vectors)?,
            Pipeline::Cnn(p) => Self::sequences(dataset, &p.vectors)?,
            Pipeline::Lstm(p) => Self::sequences(dataset, &p.vectors)?,
            Pipeline::TlmFeature(p) => {
                let features = aggregate_file(&p.tensor, p.mode)?;
                if features.len() != dataset.len() {
                    return Err(FormatError::Row {
                        row: 0,
                        message: format!(
                            "token tensor holds {} documents but the dataset has {}",
                            features.len(),
                            dataset.len()
                        ),
                    });
                }
                Prepared::Aggregated(features)
            }
        })
    }

    fn bow(dataset: &Dataset, params: &BowParams) -> Result<Prepared, FormatError> {
        let stopwords = load_stopwords(params.stopwords.as_deref())?;
        let tokens = tokenize_all(dataset, PrepConfig::bag_of_words(), stopwords.clone());
        Ok(Prepared::Bow { tokens, stopwords })
    }

    fn vectors(dataset: &Dataset, path: &Path) -> Result<Prepared, FormatError> {
        let tokens = tokenize_all(dataset, PrepConfig::word_vectors(), StopWords::from_lines(""));
        let table = load_table_for(path, &tokens)?;
        Ok(Prepared::Vectors { tokens, table })
    }

    fn sequences(dataset: &Dataset, path: &Path) -> Result<Prepared, FormatError> {
        let tokens = tokenize_all(dataset, PrepConfig::word_vectors(), StopWords::from_lines(""));
        let table = load_table_for(path, &tokens)?;
        let mut encoder = SequenceEncoder::new(&table);
        let ids = tokens.iter().map(|d| encoder.resolve(d)).collect();
        Ok(Prepared::Sequences {
            ids,
            matrix: Arc::new(encoder.into_matrix()),
        })
    }
}

/// Seed for everything fitted inside one fold.
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(fold as u64 + 1)
}

/// Document indices outside and inside `fold`, in dataset order.
pub fn fold_indices(dataset: &Dataset, fold: usize) -> (Vec<usize>, Vec<usize>) {
    (0..dataset.len()).partition(|&i| dataset.documents()[i].fold != Some(fold))
}

/// Hyperparameter-selection split of a fold's training part: documents
/// marked `validation` when there are any, otherwise the preceding fold.
pub fn validation_split(dataset: &Dataset, fold: usize, train: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let docs = dataset.documents();
    let (val, fit): (Vec<usize>, Vec<usize>) = train.iter().partition(|&&i| docs[i].split == Some(Split::Validation));
    if !val.is_empty() && !fit.is_empty() {
        return (fit, val);
    }
    let previous = (fold + dataset.k() - 1) % dataset.k();
    let (val, fit) = train.iter().partition(|&&i| docs[i].fold == Some(previous));
    (fit, val)
}

fn labels(dataset: &Dataset, idx: &[usize]) -> Vec<Polarity> {
    idx.iter().map(|&i| dataset.documents()[i].polarity).collect()
}

pub fn fit_fold(
    config: &ExperimentConfig,
    dataset: &Dataset,
    prepared: &Prepared,
    fold: usize,
) -> Result<FoldFit, String> {
    let (train_idx, test_idx) = fold_indices(dataset, fold);
    let seed = fold_seed(config.seed, fold);
    let train_y = labels(dataset, &train_idx);
    let pick = |tokens: &[TokenizedDoc], idx: &[usize]| idx.iter().map(|&i| tokens[i].clone()).collect::<Vec<_>>();
    match (&config.pipeline, prepared) {
        (Pipeline::Tfidf(params), Prepared::Bow { tokens, stopwords }) => {
            let train_docs = pick(tokens, &train_idx);
            let (tr, te, note) = tfidf_rows(&train_docs, &train_y, &pick(tokens, &test_idx), params, stopwords)?;
            let to_features = |rows: Vec<SparseVector>| rows.into_iter().map(Features::Sparse).collect::<Vec<_>>();
            head(to_features(tr), &train_y, to_features(te), &config.head, seed, note)
        }
        (Pipeline::Lsa(params), Prepared::Bow { tokens, stopwords }) => {
            let train_docs = pick(tokens, &train_idx);
            let (tr, te, note) = tfidf_rows(
                &train_docs,
                &train_y,
                &pick(tokens, &test_idx),
                &params.bow(),
                stopwords,
            )?;
            let opts = LsaOptions {
                seed,
                ..LsaOptions::default()
            };
            let model = lsa_fit_with(&tr, params.components, &opts).map_err(text)?;
            let project = |rows: &[SparseVector]| -> Result<Vec<Features>, String> {
                rows.iter()
                    .map(|r| lsa_transform(r, &model).map(Features::Dense).map_err(text))
                    .collect()
            };
            let note = format!("{note} components={}", params.components);
            head(project(&tr)?, &train_y, project(&te)?, &config.head, seed, note)
        }
        (Pipeline::AvgBowv(_), Prepared::Vectors { tokens, table }) => {
            let embed = |idx: &[usize]| idx.iter().map(|&i| avg_bowv(&tokens[i], table)).collect::<Vec<_>>();
            let (tr, te) = (embed(&train_idx), embed(&test_idx));
            let empty = tr.iter().chain(&te).filter(|v| v.empty).count();
            let dense = |v: Vec<_>| {
                v.into_iter()
                    .map(|d: revembed_core::wordvec::DocVector| Features::Dense(d.values))
                    .collect()
            };
            head(
                dense(tr),
                &train_y,
                dense(te),
                &config.head,
                seed,
                format!("empty_docs={empty}"),
            )
        }
        (Pipeline::IdfBowv(params), Prepared::Vectors { tokens, table }) => {
            let train_docs = pick(tokens, &train_idx);
            let range = NgramRange::new(1, 1).map_err(text)?;
            let vocab =
                build_vocabulary(&train_docs, range, params.min_count, &StopWords::from_lines("")).map_err(text)?;
            let embed = |idx: &[usize]| {
                idx.iter()
                    .map(|&i| idf_bowv(&tokens[i], table, &vocab))
                    .collect::<Vec<_>>()
            };
            let (tr, te) = (embed(&train_idx), embed(&test_idx));
            let empty = tr.iter().chain(&te).filter(|v| v.empty).count();
            let dense = |v: Vec<_>| {
                v.into_iter()
                    .map(|d: revembed_core::wordvec::DocVector| Features::Dense(d.values))
                    .collect()
            };
            let note = format!("idf_terms={} empty_docs={empty}", vocab.len());
            head(dense(tr), &train_y, dense(te), &config.head, seed, note)
        }
        (Pipeline::TlmFeature(_), Prepared::Aggregated(features)) => {
            let pick = |idx: &[usize]| idx.iter().map(|&i| Features::Dense(features[i].clone())).collect();
            head(
                pick(&train_idx),
                &train_y,
                pick(&test_idx),
                &config.head,
                seed,
                String::new(),
            )
        }
        (Pipeline::Cnn(params), Prepared::Sequences { ids, matrix }) => {
            let widest = params.filter_sizes.iter().copied().max().unwrap_or(1);
            let job = NeuralJob {
                dataset,
                fold,
                train: &train_idx,
                test: &test_idx,
                ids,
                training: &params.training,
                seed,
            };
            job.run(widest, |seq_len, dropout| {
                let cfg = CnnConfig {
                    filter_sizes: params.filter_sizes.clone(),
                    feature_maps: params.feature_maps,
                    embed_dim: matrix.dim(),
                    dropout,
                    seq_len,
                };
                Cnn::new(cfg, Arc::clone(matrix), seed)
            })
        }
        (Pipeline::Lstm(params), Prepared::Sequences { ids, matrix }) => {
            let job = NeuralJob {
                dataset,
                fold,
                train: &train_idx,
                test: &test_idx,
                ids,
                training: &params.training,
                seed,
            };
            job.run(1, |seq_len, dropout| {
                let cfg = LstmConfig {
                    layers: params.layers,
                    hidden_size: params.hidden_size,
                    pooling: params.pooling,
                    embed_dim: matrix.dim(),
                    dropout,
                    seq_len,
                };
                Lstm::new(cfg, Arc::clone(matrix), seed)
            })
        }
        _ => Err(format!(
            "{} pipeline given inputs prepared for another family",
            config.pipeline.family()
        )),
    }
}

/// Vocabulary, selection and TF-IDF rows fitted on the training part.
fn tfidf_rows(
    train_docs: &[TokenizedDoc],
    train_y: &[Polarity],
    test_docs: &[TokenizedDoc],
    params: &BowParams,
    stopwords: &StopWords,
) -> Result<(Vec<SparseVector>, Vec<SparseVector>, String), String> {
    let range = NgramRange::new(params.ngram_min, params.ngram_max).map_err(text)?;
    let full = build_vocabulary(train_docs, range, params.min_count, stopwords).map_err(text)?;
    let vocab = match params.vocab_size {
        Some(size) => {
            let sel = select_features(&full, train_docs, train_y, params.selection, size).map_err(text)?;
            if sel.size_exceeded {
                log::warn!("vocabulary size {size} exceeds the {} available entries", full.len());
            }
            sel.vocabulary
        }
        None => full,
    };
    let rows = |docs: &[TokenizedDoc]| docs.iter().map(|d| tfidf_transform(d, &vocab)).collect();
    Ok((rows(train_docs), rows(test_docs), format!("vocab={}", vocab.len())))
}

fn head(
    train_x: Vec<Features>,
    train_y: &[Polarity],
    test_x: Vec<Features>,
    cfg: &HeadConfig,
    seed: u64,
    note: String,
) -> Result<FoldFit, String> {
    let dim = train_x.first().map(Features::dim).ok_or("empty training fold")?;
    let mut model = LogisticRegression::new(dim).map_err(text)?;
    train(&mut model, &train_x, train_y, None, &cfg.train_config(seed)).map_err(text)?;
    let probabilities = predict(&model, &test_x, cfg.batch_size).map_err(text)?;
    Ok(FoldFit {
        probabilities,
        note,
        params: model.params().clone(),
    })
}

struct NeuralJob<'a> {
    dataset: &'a Dataset,
    fold: usize,
    train: &'a [usize],
    test: &'a [usize],
    ids: &'a [Vec<u32>],
    training: &'a NeuralTraining,
    seed: u64,
}

impl NeuralJob<'_> {
    fn sequences(&self, idx: &[usize], seq_len: usize) -> Vec<Sequence> {
        idx.iter().map(|&i| pad_ids(self.ids[i].clone(), seq_len)).collect()
    }

    fn train_config(&self, point: GridPoint, epochs: usize) -> TrainConfig {
        TrainConfig {
            learning_rate: point.learning_rate,
            dropout: point.dropout,
            epochs,
            batch_size: self.training.batch_size,
            seed: self.seed,
        }
    }

    /// Grid search on the validation split when there is anything to
    /// choose, then a final fit on the whole training part.
    fn run<M, F>(&self, min_len: usize, make: F) -> Result<FoldFit, String>
    where
        M: Model<Input = Sequence>,
        F: Fn(usize, f64) -> Result<M, NeuralError>,
    {
        let t = self.training;
        let seq_len = match t.seq_len {
            Some(s) => s,
            None => {
                let lengths: Vec<usize> = self.train.iter().map(|&i| self.ids[i].len().max(1)).collect();
                percentile_of_lengths(&lengths, t.length_percentile)
                    .map_err(text)?
                    .max(min_len)
            }
        };
        let points = grid_points(&t.dropouts, &t.learning_rates);
        let (point, epochs) = if points.len() == 1 && !t.select_epochs {
            (points[0], t.epochs)
        } else {
            let (fit, val) = validation_split(self.dataset, self.fold, self.train);
            if fit.is_empty() || val.is_empty() {
                return Err("no validation documents for hyperparameter selection".into());
            }
            let (fx, fy) = (self.sequences(&fit, seq_len), labels(self.dataset, &fit));
            let (vx, vy) = (self.sequences(&val, seq_len), labels(self.dataset, &val));
            let outcome = grid_search(&t.dropouts, &t.learning_rates, t.select_epochs, |p| {
                let mut model = make(seq_len, p.dropout)?;
                let report = train(&mut model, &fx, &fy, Some((&vx, &vy)), &self.train_config(p, t.epochs))?;
                Ok(report.validation_auc.iter().map(|a| a.unwrap_or(f64::NAN)).collect())
            })
            .map_err(text)?;
            log::debug!(
                "fold {}: validation ROC-AUC {:.4} at {:?}",
                self.fold,
                outcome.score,
                outcome.point
            );
            (outcome.point, outcome.epochs)
        };
        let mut model = make(seq_len, point.dropout).map_err(text)?;
        let (x, y) = (self.sequences(self.train, seq_len), labels(self.dataset, self.train));
        train(&mut model, &x, &y, None, &self.train_config(point, epochs)).map_err(text)?;
        let probabilities = predict(&model, &self.sequences(self.test, seq_len), t.batch_size).map_err(text)?;
        Ok(FoldFit {
            probabilities,
            note: format!(
                "dropout={} lr={} epochs={epochs} seq_len={seq_len}",
                point.dropout, point.learning_rate
            ),
            params: model.params().clone(),
        })
    }
}
