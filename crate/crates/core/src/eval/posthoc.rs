use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::dist::qtukey;
use super::friedman::{friedman_test, FriedmanResult};
use super::rank::{RankTable, ScoreTable};
use super::EvalError;
use crate::math::sqrt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PosthocMethod {
    /// Tukey's honestly significant difference on the raw metric values.
    #[default]
    Tukey,
    /// Critical difference between average Friedman ranks.
    Nemenyi,
}

impl fmt::Display for PosthocMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PosthocMethod::Tukey => "tukey",
            PosthocMethod::Nemenyi => "nemenyi",
        })
    }
}

/// Relation between neighbours of the ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    /// The left method is significantly worse.
    Less,
    Equivalent,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Less => "<",
            Relation::Equivalent => "≡",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pairwise {
    pub method: PosthocMethod,
    pub alpha: f64,
    pub methods: Vec<String>,
    pub average_ranks: Vec<f64>,
    /// Per-method mean of the raw values.
    pub means: Vec<f64>,
    /// Critical difference (ranks) or honest significant difference (metric).
    pub threshold: f64,
    /// `different[i][j]`: methods `i` and `j` differ significantly.
    pub different: Vec<Vec<bool>>,
    /// Method indices from worst to best.
    pub order: Vec<usize>,
    /// `relations[k]` links `order[k]` and `order[k + 1]`.
    pub relations: Vec<Relation>,
}

impl Pairwise {
    /// `A < B ≡ C` from worst to best.
    pub fn chain(&self) -> String {
        let mut out = String::new();
        for (k, &i) in self.order.iter().enumerate() {
            if k > 0 {
                out.push(' ');
                out.push_str(self.relations[k - 1].symbol());
                out.push(' ');
            }
            out.push_str(&self.methods[i]);
        }
        out
    }

    /// Every pair of methods differs significantly.
    pub fn fully_ordered(&self) -> bool {
        let m = self.methods.len();
        (0..m).all(|i| (0..m).all(|j| i == j || self.different[i][j]))
    }
}

fn check_alpha(alpha: f64) -> Result<(), EvalError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(EvalError::InvalidAlpha(alpha))
    }
}

fn means(table: &ScoreTable) -> Vec<f64> {
    (0..table.n_methods())
        .map(|j| table.column(j).iter().sum::<f64>() / table.n_blocks() as f64)
        .collect()
}

fn assemble(
    method: PosthocMethod,
    alpha: f64,
    table: &ScoreTable,
    threshold: f64,
    gap: impl Fn(usize, usize) -> f64,
    worse: impl Fn(usize, usize) -> core::cmp::Ordering,
) -> Pairwise {
    let m = table.n_methods();
    let average_ranks = RankTable::from_scores(table).average_ranks();
    let different: Vec<Vec<bool>> = (0..m)
        .map(|i| (0..m).map(|j| i != j && gap(i, j) > threshold).collect())
        .collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| worse(a, b).then_with(|| table.methods()[a].cmp(&table.methods()[b])));
    let relations = order
        .windows(2)
        .map(|w| {
            if different[w[0]][w[1]] {
                Relation::Less
            } else {
                Relation::Equivalent
            }
        })
        .collect();
    Pairwise {
        method,
        alpha,
        methods: table.methods().to_vec(),
        average_ranks,
        means: means(table),
        threshold,
        different,
        order,
        relations,
    }
}

/// Nemenyi test: methods differ when their average ranks are further
/// apart than `CD = q_alpha(m, inf) / sqrt(2) * sqrt(m (m+1) / (6 n))`.
pub fn nemenyi(table: &ScoreTable, alpha: f64) -> Result<Pairwise, EvalError> {
    check_alpha(alpha)?;
    let m = table.n_methods();
    if m < 2 {
        return Err(EvalError::TooFewMethods { min: 2, got: m });
    }
    let (mf, nf) = (m as f64, table.n_blocks() as f64);
    let q = qtukey(1.0 - alpha, m, f64::INFINITY)? / core::f64::consts::SQRT_2;
    let cd = q * sqrt(mf * (mf + 1.0) / (6.0 * nf));
    let ranks = RankTable::from_scores(table).average_ranks();
    Ok(assemble(
        PosthocMethod::Nemenyi,
        alpha,
        table,
        cd,
        |i, j| (ranks[i] - ranks[j]).abs(),
        |a, b| ranks[b].total_cmp(&ranks[a]),
    ))
}

/// Tukey HSD for a randomized block design: folds are blocks shared by
/// every method, so the error term is the residual of the additive
/// method + block model. Methods differ when their means are further
/// apart than `q_alpha(m, (n - 1)(m - 1)) * sqrt(MSE / n)`.
pub fn tukey_hsd(table: &ScoreTable, alpha: f64) -> Result<Pairwise, EvalError> {
    check_alpha(alpha)?;
    let m = table.n_methods();
    let n = table.n_blocks();
    if m < 2 {
        return Err(EvalError::TooFewMethods { min: 2, got: m });
    }
    if n < 2 {
        return Err(EvalError::TooFewBlocks { min: 2, got: n });
    }
    let mu = means(table);
    let grand = mu.iter().sum::<f64>() / m as f64;
    let mut sse = 0.0;
    for row in table.values() {
        let block_mean = row.iter().sum::<f64>() / m as f64;
        for (j, v) in row.iter().enumerate() {
            let e = v - mu[j] - block_mean + grand;
            sse += e * e;
        }
    }
    let df = ((n - 1) * (m - 1)) as f64;
    let q = qtukey(1.0 - alpha, m, df)?;
    let hsd = q * sqrt(sse / df / n as f64);
    Ok(assemble(
        PosthocMethod::Tukey,
        alpha,
        table,
        hsd,
        |i, j| (mu[i] - mu[j]).abs(),
        |a, b| mu[a].total_cmp(&mu[b]),
    ))
}

/// Friedman test followed, when it rejects at `alpha`, by the chosen
/// pairwise procedure.
pub fn posthoc_pairwise(
    table: &ScoreTable,
    alpha: f64,
    method: PosthocMethod,
) -> Result<(FriedmanResult, Pairwise), EvalError> {
    check_alpha(alpha)?;
    let friedman = friedman_test(table)?;
    if !(friedman.p_value < alpha) {
        return Err(EvalError::NotSignificant {
            p: friedman.p_value,
            alpha,
        });
    }
    let pairwise = match method {
        PosthocMethod::Tukey => tukey_hsd(table, alpha)?,
        PosthocMethod::Nemenyi => nemenyi(table, alpha)?,
    };
    Ok((friedman, pairwise))
}
