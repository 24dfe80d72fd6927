use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::dist::chi2_sf;
use super::rank::{RankTable, ScoreTable};
use super::EvalError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    pub chi2: f64,
    pub df: usize,
    pub p_value: f64,
    pub n_blocks: usize,
    pub n_methods: usize,
    pub average_ranks: Vec<f64>,
}

/// Friedman's test on raw metrics (higher is better within each block).
pub fn friedman_test(table: &ScoreTable) -> Result<FriedmanResult, EvalError> {
    friedman_from_ranks(&RankTable::from_scores(table))
}

/// Friedman chi-square with the usual correction for ties:
///
/// `chi2 = [12 / (n m (m+1)) * sum R_j^2 - 3 n (m+1)] / C`,
/// `C = 1 - sum (t^3 - t) / (n (m^3 - m))`
///
/// where `R_j` are rank sums and `t` the sizes of tie groups. A table
/// with every block fully tied gives `chi2 = 0`, `p = 1`.
pub fn friedman_from_ranks(ranks: &RankTable) -> Result<FriedmanResult, EvalError> {
    let m = ranks.n_methods();
    let n = ranks.n_blocks();
    if m < 3 {
        return Err(EvalError::TooFewMethods { min: 3, got: m });
    }
    if n < 2 {
        return Err(EvalError::TooFewBlocks { min: 2, got: n });
    }
    let (mf, nf) = (m as f64, n as f64);
    let average_ranks = ranks.average_ranks();
    let sum_sq: f64 = average_ranks.iter().map(|r| (r * nf) * (r * nf)).sum();
    let numerator = 12.0 / (nf * mf * (mf + 1.0)) * sum_sq - 3.0 * nf * (mf + 1.0);
    let mut ties = 0.0;
    for row in ranks.ranks() {
        let mut sorted = row.clone();
        sorted.sort_by(f64::total_cmp);
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i + 1;
            while j < sorted.len() && sorted[j] == sorted[i] {
                j += 1;
            }
            let t = (j - i) as f64;
            ties += t * t * t - t;
            i = j;
        }
    }
    let correction = 1.0 - ties / (nf * (mf * mf * mf - mf));
    let df = m - 1;
    if correction <= 0.0 {
        return Ok(FriedmanResult {
            chi2: 0.0,
            df,
            p_value: 1.0,
            n_blocks: n,
            n_methods: m,
            average_ranks,
        });
    }
    let chi2 = (numerator / correction).max(0.0);
    let p_value = chi2_sf(chi2, df as f64)?;
    Ok(FriedmanResult {
        chi2,
        df,
        p_value,
        n_blocks: n,
        n_methods: m,
        average_ranks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::String;
    use alloc::vec;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| alloc::format!("x{i}")).collect()
    }

    #[test]
    fn identical_methods() {
        let t = ScoreTable::new(names(4), names(6), vec![vec![0.8; 4]; 6]).unwrap();
        let r = friedman_test(&t).unwrap();
        assert_eq!(r.chi2, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.df, 3);
    }

    #[test]
    fn perfect_agreement() {
        // every block ranks the methods identically: chi2 = n (m - 1)
        let t = ScoreTable::new(names(5), names(10), vec![vec![5.0, 4.0, 3.0, 2.0, 1.0]; 10]).unwrap();
        let r = friedman_test(&t).unwrap();
        assert!((r.chi2 - 40.0).abs() < 1e-10);
        assert_eq!(r.df, 4);
        assert!(r.p_value < 1e-6);
    }

    #[test]
    fn needs_three_methods() {
        let t = ScoreTable::new(names(2), names(3), vec![vec![1.0, 2.0]; 3]).unwrap();
        assert_eq!(
            friedman_test(&t).unwrap_err(),
            EvalError::TooFewMethods { min: 3, got: 2 }
        );
    }
}
