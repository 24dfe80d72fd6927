use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashSet;
use serde::{Deserialize, Serialize};

use super::EvalError;

/// Raw metric values, `blocks x methods`; higher is better.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    methods: Vec<String>,
    blocks: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl ScoreTable {
    pub fn new(methods: Vec<String>, blocks: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self, EvalError> {
        if methods.is_empty() {
            return Err(EvalError::TooFewMethods { min: 1, got: 0 });
        }
        if blocks.is_empty() || values.len() != blocks.len() {
            return Err(EvalError::TooFewBlocks {
                min: 1,
                got: values.len().min(blocks.len()),
            });
        }
        unique(&methods)?;
        for (b, row) in values.iter().enumerate() {
            if row.len() != methods.len() {
                return Err(EvalError::RaggedTable {
                    row: b,
                    expected: methods.len(),
                    got: row.len(),
                });
            }
            if let Some(m) = row.iter().position(|v| !v.is_finite()) {
                return Err(EvalError::NonFiniteValue { block: b, method: m });
            }
        }
        Ok(ScoreTable {
            methods,
            blocks,
            values,
        })
    }

    pub fn methods(&self) -> &[String] {
        &self.methods
    }

    pub fn blocks(&self) -> &[String] {
        &self.blocks
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn n_methods(&self) -> usize {
        self.methods.len()
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// The values of one method across blocks.
    pub fn column(&self, method: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[method]).collect()
    }
}

fn unique(methods: &[String]) -> Result<(), EvalError> {
    let mut seen = HashSet::new();
    for m in methods {
        if !seen.insert(m.as_str()) {
            return Err(EvalError::DuplicateMethod(m.clone()));
        }
    }
    Ok(())
}

/// Ranks with 1 for the largest value; tied values share their midrank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let mid = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = mid;
        }
        i = j;
    }
    ranks
}

/// Per-block ranks of the methods, ties averaged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    methods: Vec<String>,
    blocks: Vec<String>,
    ranks: Vec<Vec<f64>>,
}

impl RankTable {
    pub fn from_scores(table: &ScoreTable) -> Self {
        RankTable {
            methods: table.methods.clone(),
            blocks: table.blocks.clone(),
            ranks: table.values.iter().map(|row| midranks(row)).collect(),
        }
    }

    /// Wraps hand-assigned ranks. Every row must sum to `m(m+1)/2`.
    pub fn new(methods: Vec<String>, blocks: Vec<String>, ranks: Vec<Vec<f64>>) -> Result<Self, EvalError> {
        let shaped = ScoreTable::new(methods, blocks, ranks)?;
        let m = shaped.n_methods() as f64;
        for (b, row) in shaped.values.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - m * (m + 1.0) / 2.0).abs() > 1e-9 || row.iter().any(|&r| !(1.0..=m).contains(&r)) {
                return Err(EvalError::RaggedTable {
                    row: b,
                    expected: shaped.n_methods(),
                    got: row.len(),
                });
            }
        }
        Ok(RankTable {
            methods: shaped.methods,
            blocks: shaped.blocks,
            ranks: shaped.values,
        })
    }

    pub fn methods(&self) -> &[String] {
        &self.methods
    }

    pub fn blocks(&self) -> &[String] {
        &self.blocks
    }

    pub fn ranks(&self) -> &[Vec<f64>] {
        &self.ranks
    }

    pub fn n_methods(&self) -> usize {
        self.methods.len()
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn average_ranks(&self) -> Vec<f64> {
        let n = self.ranks.len() as f64;
        (0..self.methods.len())
            .map(|j| self.ranks.iter().map(|row| row[j]).sum::<f64>() / n)
            .collect()
    }
}

pub type GridCell = Option<f64>;

/// Configurations (rows) by databases (columns). Each row belongs to a
/// method; a method may own several rows (e.g. aggregation variants).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricGrid {
    pub row_methods: Vec<String>,
    pub row_variants: Vec<String>,
    pub columns: Vec<String>,
    pub cells: Vec<Vec<GridCell>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedMethod {
    pub method: String,
    pub average_rank: f64,
    /// Number of ranked cells that went into the average.
    pub cells: usize,
}

/// Ranks every configuration within each database column (1 = best,
/// ties averaged), then averages each method's ranks over all of its
/// rows and columns. Missing cells are an error unless `allow_missing`,
/// in which case they are left out of both the column ranking and the
/// average.
pub fn average_rank(grid: &MetricGrid, allow_missing: bool) -> Result<Vec<RankedMethod>, EvalError> {
    let rows = grid.cells.len();
    if rows == 0 || grid.columns.is_empty() {
        return Err(EvalError::Empty);
    }
    if grid.row_methods.len() != rows {
        return Err(EvalError::RaggedTable {
            row: 0,
            expected: rows,
            got: grid.row_methods.len(),
        });
    }
    for (r, row) in grid.cells.iter().enumerate() {
        if row.len() != grid.columns.len() {
            return Err(EvalError::RaggedTable {
                row: r,
                expected: grid.columns.len(),
                got: row.len(),
            });
        }
        for (c, cell) in row.iter().enumerate() {
            match cell {
                None if !allow_missing => return Err(EvalError::MissingCell { row: r, column: c }),
                Some(v) if !v.is_finite() => return Err(EvalError::NonFiniteValue { block: c, method: r }),
                _ => {}
            }
        }
    }
    let mut methods: Vec<String> = Vec::new();
    for m in &grid.row_methods {
        if !methods.contains(m) {
            methods.push(m.clone());
        }
    }
    let mut sums = vec![0.0; methods.len()];
    let mut counts = vec![0usize; methods.len()];
    for c in 0..grid.columns.len() {
        let present: Vec<usize> = (0..rows).filter(|&r| grid.cells[r][c].is_some()).collect();
        let values: Vec<f64> = present.iter().map(|&r| grid.cells[r][c].unwrap_or(0.0)).collect();
        for (&r, rank) in present.iter().zip(midranks(&values)) {
            let m = methods.iter().position(|x| *x == grid.row_methods[r]).unwrap_or(0);
            sums[m] += rank;
            counts[m] += 1;
        }
    }
    let mut out: Vec<RankedMethod> = methods
        .into_iter()
        .zip(sums.into_iter().zip(counts))
        .filter(|(_, (_, n))| *n > 0)
        .map(|(method, (s, n))| RankedMethod {
            method,
            average_rank: s / n as f64,
            cells: n,
        })
        .collect();
    out.sort_by(|a, b| {
        a.average_rank
            .total_cmp(&b.average_rank)
            .then_with(|| a.method.cmp(&b.method))
    });
    Ok(out)
}
