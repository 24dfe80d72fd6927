//! Cross-method comparison of fold reports, and average-rank tables over
//! configuration grids.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::Metric;
use crate::report::FoldRow;
use revembed_core::eval::{
    average_rank, friedman_test, nemenyi, tukey_hsd, EvalError, FriedmanResult, MetricGrid, Pairwise, PosthocMethod,
    RankedMethod, ScoreTable,
};

#[derive(Debug, thiserror::Error)]
pub enum CompareError {
    #[error("no fold rows to compare")]
    Empty,
    #[error("dataset {dataset:?}: method {method:?} covers folds {found:?}, expected {expected:?}")]
    MismatchedFolds {
        dataset: String,
        method: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("dataset {dataset:?}: method {method:?} reports fold {fold} twice")]
    DuplicateFold {
        dataset: String,
        method: String,
        fold: usize,
    },
    #[error("{path}: {message}")]
    Grid { path: PathBuf, message: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    /// One method: nothing to test.
    Single,
    /// Two methods: the Friedman test needs at least three.
    TooFewMethods,
    /// Friedman does not reject; every method is equivalent.
    NotSignificant { friedman: FriedmanResult },
    Ordered {
        friedman: FriedmanResult,
        pairwise: Pairwise,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub dataset: String,
    pub metric: Metric,
    pub alpha: f64,
    pub folds: Vec<usize>,
    /// Sorted by name.
    pub methods: Vec<String>,
    pub means: Vec<f64>,
    pub verdict: Verdict,
}

impl Comparison {
    /// Method indices from worst to best.
    pub fn order(&self) -> Vec<usize> {
        if let Verdict::Ordered { pairwise, .. } = &self.verdict {
            return pairwise.order.clone();
        }
        let mut order: Vec<usize> = (0..self.methods.len()).collect();
        order.sort_by(|&a, &b| {
            self.means[a]
                .total_cmp(&self.means[b])
                .then_with(|| self.methods[a].cmp(&self.methods[b]))
        });
        order
    }

    /// `A < B ≡ C`, worst first. Without a significant test every link
    /// is an equivalence.
    pub fn chain(&self) -> String {
        if let Verdict::Ordered { pairwise, .. } = &self.verdict {
            return pairwise.chain();
        }
        let names: Vec<&str> = self.order().iter().map(|&i| self.methods[i].as_str()).collect();
        names.join(" ≡ ")
    }
}

type Grouped = BTreeMap<String, BTreeMap<String, BTreeMap<usize, f64>>>;

fn group(rows: &[FoldRow], metric: Metric) -> Result<Grouped, CompareError> {
    let mut out: Grouped = BTreeMap::new();
    for r in rows {
        let folds = out
            .entry(r.dataset.clone())
            .or_default()
            .entry(r.method.clone())
            .or_default();
        if folds.insert(r.fold, r.metric(metric)).is_some() {
            return Err(CompareError::DuplicateFold {
                dataset: r.dataset.clone(),
                method: r.method.clone(),
                fold: r.fold,
            });
        }
    }
    Ok(out)
}

/// Compares every method within each dataset. The result does not depend
/// on row order: datasets and methods are sorted by name.
pub fn compare(
    rows: &[FoldRow],
    metric: Metric,
    alpha: f64,
    posthoc: PosthocMethod,
) -> Result<Vec<Comparison>, CompareError> {
    if rows.is_empty() {
        return Err(CompareError::Empty);
    }
    let mut out = Vec::new();
    for (dataset, methods) in group(rows, metric)? {
        let mut iter = methods.iter();
        let (_, first) = iter.next().ok_or(CompareError::Empty)?;
        let folds: Vec<usize> = first.keys().copied().collect();
        for (method, values) in iter {
            let found: Vec<usize> = values.keys().copied().collect();
            if found != folds {
                return Err(CompareError::MismatchedFolds {
                    dataset,
                    method: method.clone(),
                    expected: folds,
                    found,
                });
            }
        }
        let names: Vec<String> = methods.keys().cloned().collect();
        let means: Vec<f64> = methods
            .values()
            .map(|v| v.values().sum::<f64>() / v.len() as f64)
            .collect();
        let values: Vec<Vec<f64>> = folds.iter().map(|f| methods.values().map(|v| v[f]).collect()).collect();
        let verdict = match names.len() {
            1 => Verdict::Single,
            2 => Verdict::TooFewMethods,
            _ => {
                let blocks = folds.iter().map(|f| format!("fold{f}")).collect();
                let table = ScoreTable::new(names.clone(), blocks, values)?;
                let friedman = friedman_test(&table)?;
                if friedman.p_value < alpha {
                    let pairwise = match posthoc {
                        PosthocMethod::Tukey => tukey_hsd(&table, alpha)?,
                        PosthocMethod::Nemenyi => nemenyi(&table, alpha)?,
                    };
                    Verdict::Ordered { friedman, pairwise }
                } else {
                    Verdict::NotSignificant { friedman }
                }
            }
        };
        out.push(Comparison {
            dataset,
            metric,
            alpha,
            folds,
            methods: names,
            means,
            verdict,
        });
    }
    Ok(out)
}

pub fn render_comparisons(comparisons: &[Comparison]) -> String {
    let mut out = String::new();
    for (i, c) in comparisons.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "dataset {} ({}, {} folds, {} methods, alpha {})",
            c.dataset,
            c.metric.as_str(),
            c.folds.len(),
            c.methods.len(),
            c.alpha
        );
        match &c.verdict {
            Verdict::Single => out.push_str("single method, no test\n"),
            Verdict::TooFewMethods => out.push_str("two methods, the Friedman test needs at least three\n"),
            Verdict::NotSignificant { friedman } | Verdict::Ordered { friedman, .. } => {
                let _ = writeln!(
                    out,
                    "friedman chi2({}) = {:.4}, p = {:.4e}",
                    friedman.df, friedman.chi2, friedman.p_value
                );
            }
        }
        match &c.verdict {
            Verdict::NotSignificant { .. } => out.push_str("not significant, all methods equivalent\n"),
            Verdict::Ordered { pairwise, .. } => {
                let _ = writeln!(out, "posthoc {} threshold {:.6}", pairwise.method, pairwise.threshold);
            }
            _ => {}
        }
        let _ = writeln!(out, "ordering {}", c.chain());
        let ranks = match &c.verdict {
            Verdict::NotSignificant { friedman } | Verdict::Ordered { friedman, .. } => Some(&friedman.average_ranks),
            _ => None,
        };
        let _ = writeln!(out, "{:<24} {:>10} {:>9}", "method", "mean", "avg_rank");
        for &m in c.order().iter().rev() {
            let rank = ranks.map_or(String::from("-"), |r| format!("{:.2}", r[m]));
            let _ = writeln!(out, "{:<24} {:>10.6} {:>9}", c.methods[m], c.means[m], rank);
        }
    }
    out
}

/// One line of a rank grid: a configuration's metric on one database.
/// An empty value marks a missing cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub method: String,
    pub variant: String,
    pub database: String,
    pub value: Option<f64>,
}

pub fn read_grid(path: &Path) -> Result<MetricGrid, CompareError> {
    let err = |message: String| CompareError::Grid {
        path: path.to_owned(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
    let rows: Vec<GridRow> = reader
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| err(e.to_string()))?;
    grid_from_rows(&rows).map_err(err)
}

/// Rows are `(method, variant)` pairs in first-seen order, columns the
/// databases in first-seen order.
pub fn grid_from_rows(rows: &[GridRow]) -> Result<MetricGrid, String> {
    let mut keys: Vec<(String, String)> = Vec::new();
    let mut columns: Vec<String> = Vec::new();
    for r in rows {
        let key = (r.method.clone(), r.variant.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
        if !columns.contains(&r.database) {
            columns.push(r.database.clone());
        }
    }
    let mut cells = vec![vec![None; columns.len()]; keys.len()];
    let mut seen = vec![vec![false; columns.len()]; keys.len()];
    for r in rows {
        let i = keys
            .iter()
            .position(|k| k.0 == r.method && k.1 == r.variant)
            .unwrap_or(0);
        let j = columns.iter().position(|c| *c == r.database).unwrap_or(0);
        if seen[i][j] {
            return Err(format!("{} / {} on {} appears twice", r.method, r.variant, r.database));
        }
        seen[i][j] = true;
        cells[i][j] = r.value;
    }
    Ok(MetricGrid {
        row_methods: keys.iter().map(|k| k.0.clone()).collect(),
        row_variants: keys.into_iter().map(|k| k.1).collect(),
        columns,
        cells,
    })
}

pub fn rank_grid(grid: &MetricGrid, allow_missing: bool) -> Result<Vec<RankedMethod>, CompareError> {
    Ok(average_rank(grid, allow_missing)?)
}

pub fn render_ranks(ranks: &[RankedMethod]) -> String {
    let mut out = format!("{:<5} {:<32} {:>9} {:>6}\n", "rank", "method", "avg_rank", "cells");
    for (i, r) in ranks.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:<5} {:<32} {:>9.2} {:>6}",
            i + 1,
            r.method,
            r.average_rank,
            r.cells
        );
    }
    out
}
