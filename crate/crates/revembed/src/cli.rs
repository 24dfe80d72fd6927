//! Command-line front end. Exit codes: 0 success, 1 runtime failure,
//! 2 configuration or usage error.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::compare::{compare, rank_grid, read_grid, render_comparisons, render_ranks, CompareError};
use crate::config::{ConfigError, Metric};
use crate::formats::{load_dataset, write_dataset, write_vocabulary, DatasetSchema, FormatError, TlmeReader};
use crate::pipeline::{load_stopwords, load_table_for, tokenize_all};
use crate::report::{read_fold_rows, write_text, ReportError, FOLDS_FILE, SUMMARY_FILE};
use crate::run::{run_experiment, RunError};
use revembed_core::bow::{build_vocabulary, NgramRange};
use revembed_core::eval::PosthocMethod;
use revembed_core::textprep::{percentile_of_lengths, PrepConfig};

#[derive(Debug, Parser)]
#[command(name = "revembed", version, about = "Review-document embedding benchmarks")]
pub struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG overrides it.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a review file and print its class and fold statistics.
    Ingest(IngestArgs),
    /// Tokenize a review file and report lengths, vocabulary and coverage.
    Prep(PrepArgs),
    /// Run a cross-validated experiment from a TOML config.
    Run(RunArgs),
    /// Order methods across fold reports with Friedman and post-hoc tests.
    Compare(CompareArgs),
    /// Average ranks over a method-by-database metric grid.
    RankTlm(RankArgs),
    /// Validate a token-tensor file.
    ExportCheck(ExportCheckArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Delimited review file.
    pub data: PathBuf,
    /// TOML file with the column mapping; flags below override it.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[arg(long)]
    pub text_column: Option<String>,
    #[arg(long)]
    pub polarity_column: Option<String>,
    #[arg(long)]
    pub id_column: Option<String>,
    #[arg(long)]
    pub delimiter: Option<char>,
    /// Fold count the file's fold column uses.
    #[arg(long, value_name = "K")]
    pub folds: Option<usize>,
    /// Drop malformed rows instead of failing.
    #[arg(long)]
    pub skip_invalid_rows: bool,
}

impl DataArgs {
    fn schema(&self) -> Result<DatasetSchema, CliError> {
        let mut schema = match &self.schema {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|source| ConfigError::Read {
                    path: p.clone(),
                    source,
                })?;
                toml::from_str(&text).map_err(|e| ConfigError::Parse {
                    path: p.clone(),
                    message: e.to_string(),
                })?
            }
            None => DatasetSchema::default(),
        };
        if let Some(c) = &self.text_column {
            schema.text_column = c.clone();
        }
        if let Some(c) = &self.polarity_column {
            schema.polarity_column = c.clone();
        }
        if let Some(c) = &self.id_column {
            schema.id_column = Some(c.clone());
        }
        if let Some(d) = self.delimiter {
            schema.delimiter = d;
        }
        if let Some(k) = self.folds {
            schema.folds = k;
        }
        schema.skip_invalid_rows |= self.skip_invalid_rows;
        Ok(schema)
    }
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Assign stratified folds (replacing any in the file).
    #[arg(long, value_name = "K")]
    pub assign_folds: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the dataset, with folds, as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PrepMode {
    /// Lowercased, transliterated, digits and punctuation removed.
    Bow,
    /// Lowercased, accents and punctuation kept.
    Wordvec,
}

#[derive(Debug, Args)]
pub struct PrepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = PrepMode::Bow)]
    pub mode: PrepMode,
    /// One stop word per line; the bundled list otherwise.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Length percentile to report.
    #[arg(long, default_value_t = 90.0)]
    pub percentile: f64,
    /// Write the whole-corpus vocabulary.
    #[arg(long)]
    pub vocab_out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub ngram_min: usize,
    #[arg(long, default_value_t = 1)]
    pub ngram_max: usize,
    #[arg(long, default_value_t = 5)]
    pub min_count: u64,
    /// Report coverage against a word-vector file.
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    /// Write `id<TAB>tokens` lines.
    #[arg(long)]
    pub tokens_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub config: PathBuf,
    /// Output directory for the reports.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// `folds.csv` files or run directories containing one.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_parser = parse_metric, default_value = "roc_auc")]
    pub metric: Metric,
    #[arg(long, value_parser = parse_posthoc, default_value = "tukey")]
    pub posthoc: PosthocMethod,
    /// Also write the comparison as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// CSV with `method,variant,database,value`; an empty value is a
    /// missing cell.
    pub grid: PathBuf,
    #[arg(long)]
    pub allow_missing: bool,
    /// Write `rank,method,average_rank,cells` for plotting.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportCheckArgs {
    pub file: PathBuf,
    #[arg(long)]
    pub expect_docs: Option<u32>,
    #[arg(long)]
    pub expect_tokens: Option<u32>,
    #[arg(long)]
    pub expect_dim: Option<u32>,
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    Metric::parse(s).ok_or_else(|| format!("expected one of roc_auc, accuracy, f1, found {s:?}"))
}

fn parse_posthoc(s: &str) -> Result<PosthocMethod, String> {
    match s {
        "tukey" => Ok(PosthocMethod::Tukey),
        "nemenyi" => Ok(PosthocMethod::Nemenyi),
        _ => Err(format!("expected tukey or nemenyi, found {s:?}")),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Compare(#[from] CompareError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("output: {0}")]
    Output(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Run(e) => e.exit_code(),
            _ => 1,
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Runs one command, writing its report to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Ingest(a) => ingest(a, out),
        Command::Prep(a) => prep(a, out),
        Command::Run(a) => run(a, out),
        Command::Compare(a) => compare_reports(a, out),
        Command::RankTlm(a) => rank(a, out),
        Command::ExportCheck(a) => export_check(a, out),
    }
}

fn ingest(a: &IngestArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let loaded = load_dataset(&a.data.data, &a.data.schema()?)?;
    let dataset = match a.assign_folds {
        Some(k) => loaded
            .dataset
            .with_assigned_folds(k, a.seed)
            .map_err(|e| CliError::Usage(e.to_string()))?,
        None => loaded.dataset,
    };
    let (neg, pos) = dataset.class_counts();
    writeln!(out, "dataset   {}", dataset.name())?;
    writeln!(out, "documents {} ({neg} negative, {pos} positive)", dataset.len())?;
    writeln!(out, "skipped   {}", loaded.skipped.len())?;
    if dataset.has_folds() {
        let sizes: Vec<String> = dataset.fold_sizes().iter().map(usize::to_string).collect();
        writeln!(out, "folds     {} [{}]", dataset.k(), sizes.join(" "))?;
    } else {
        writeln!(out, "folds     none")?;
    }
    if dataset.has_splits() {
        let counts: Vec<String> = [
            revembed_core::corpus::Split::Train,
            revembed_core::corpus::Split::Validation,
            revembed_core::corpus::Split::Test,
        ]
        .iter()
        .map(|&s| format!("{s} {}", dataset.split(s).len()))
        .collect();
        writeln!(out, "splits    {}", counts.join(", "))?;
    }
    if let Some(path) = &a.out {
        let mut w = create(path)?;
        write_dataset(&mut w, &dataset)?;
        w.flush().map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
    }
    Ok(())
}

fn prep(a: &PrepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if !(0.0..=100.0).contains(&a.percentile) {
        return Err(CliError::Usage(format!(
            "--percentile {} is outside [0, 100]",
            a.percentile
        )));
    }
    let dataset = load_dataset(&a.data.data, &a.data.schema()?)?.dataset;
    let stopwords = load_stopwords(a.stopwords.as_deref())?;
    let config = match a.mode {
        PrepMode::Bow => PrepConfig::bag_of_words(),
        PrepMode::Wordvec => PrepConfig::word_vectors(),
    };
    let tokens = tokenize_all(&dataset, config, stopwords.clone());
    let lengths: Vec<usize> = tokens.iter().map(|d| d.len()).collect();
    let total: usize = lengths.iter().sum();
    let p = percentile_of_lengths(&lengths, a.percentile).map_err(|e| CliError::Failed(e.to_string()))?;
    writeln!(out, "documents {}", tokens.len())?;
    writeln!(
        out,
        "tokens    {total} (mean {:.2}, max {})",
        total as f64 / tokens.len() as f64,
        lengths.iter().max().unwrap_or(&0)
    )?;
    writeln!(out, "{:<9} {p}", format!("p{}", a.percentile))?;
    if let Some(path) = &a.vocab_out {
        let range = NgramRange::new(a.ngram_min, a.ngram_max).map_err(|e| CliError::Usage(e.to_string()))?;
        let vocab =
            build_vocabulary(&tokens, range, a.min_count, &stopwords).map_err(|e| CliError::Usage(e.to_string()))?;
        writeln!(out, "vocabulary {} entries", vocab.len())?;
        let mut w = create(path)?;
        write_vocabulary(&mut w, &vocab)?;
    }
    if let Some(path) = &a.vectors {
        let table = load_table_for(path, &tokens)?;
        let cov = revembed_core::wordvec::coverage(&tokens, &table);
        writeln!(
            out,
            "coverage  {} of {} ({:.2}%)",
            cov.resolved,
            cov.total,
            100.0 * cov.fraction()
        )?;
    }
    if let Some(path) = &a.tokens_out {
        let mut w = create(path)?;
        for d in &tokens {
            writeln!(w, "{}\t{}", d.source_id, d.tokens.join(" ")).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
        }
        w.flush().map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
    }
    Ok(())
}

fn run(a: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let outcome = run_experiment(&a.config, &a.out)?;
    let summary = a.out.join(SUMMARY_FILE);
    out.write_all(
        fs::read_to_string(&summary)
            .map_err(|source| CliError::Io { path: summary, source })?
            .as_bytes(),
    )?;
    match outcome.failed_folds() {
        0 => Ok(()),
        n => Err(CliError::Failed(format!("{n} of {} folds failed", outcome.lines.len()))),
    }
}

fn compare_reports(a: &CompareArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(CliError::Usage(format!("--alpha {} is outside (0, 1)", a.alpha)));
    }
    let mut rows = Vec::new();
    for p in &a.reports {
        let path = if p.is_dir() { p.join(FOLDS_FILE) } else { p.clone() };
        rows.extend(read_fold_rows(&path)?);
    }
    let comparisons = compare(&rows, a.metric, a.alpha, a.posthoc)?;
    out.write_all(render_comparisons(&comparisons).as_bytes())?;
    if let Some(path) = &a.out {
        let json = serde_json::to_string_pretty(&comparisons).map_err(ReportError::from)?;
        write_text(path, &(json + "\n"))?;
    }
    Ok(())
}

fn rank(a: &RankArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let grid = read_grid(&a.grid)?;
    let ranks = rank_grid(&grid, a.allow_missing)?;
    out.write_all(render_ranks(&ranks).as_bytes())?;
    if let Some(path) = &a.out {
        let mut w = csv::Writer::from_writer(create(path)?);
        let csv_err = |e: csv::Error| CliError::Failed(format!("{}: {e}", path.display()));
        w.write_record(["rank", "method", "average_rank", "cells"])
            .map_err(csv_err)?;
        for (i, r) in ranks.iter().enumerate() {
            let row = [
                (i + 1).to_string(),
                r.method.clone(),
                r.average_rank.to_string(),
                r.cells.to_string(),
            ];
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
    }
    Ok(())
}

fn export_check(a: &ExportCheckArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file = File::open(&a.file).map_err(|source| CliError::Io {
        path: a.file.clone(),
        source,
    })?;
    let mut reader = TlmeReader::new(BufReader::new(file))?;
    let h = reader.header();
    let lengths = reader.real_lengths().to_vec();
    let mut docs = 0usize;
    while reader.next_document()?.is_some() {
        docs += 1;
    }
    reader.finish()?;
    let (min, max) = (
        lengths.iter().min().copied().unwrap_or(0),
        lengths.iter().max().copied().unwrap_or(0),
    );
    let mean = lengths.iter().map(|&l| l as f64).sum::<f64>() / lengths.len().max(1) as f64;
    writeln!(out, "documents {}", h.n_docs)?;
    writeln!(out, "tokens    {}", h.n_tokens)?;
    writeln!(out, "dim       {}", h.dim)?;
    writeln!(out, "lengths   min {min}, mean {mean:.2}, max {max}")?;
    let mut problems = Vec::new();
    for (what, expected, found) in [
        ("documents", a.expect_docs, h.n_docs),
        ("tokens", a.expect_tokens, h.n_tokens),
        ("dim", a.expect_dim, h.dim),
    ] {
        if let Some(e) = expected.filter(|&e| e != found) {
            problems.push(format!("{what}: expected {e}, found {found}"));
        }
    }
    debug_assert_eq!(docs, h.n_docs as usize);
    if problems.is_empty() {
        writeln!(out, "ok")?;
        Ok(())
    } else {
        Err(CliError::Failed(problems.join("; ")))
    }
}
