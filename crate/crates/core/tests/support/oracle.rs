//! Independent brute-force evaluations. Each check returns a measurement
//! so callers can both assert on it and report it.

use std::collections::HashMap;

use rand::Rng;
use revembed_core::bow::{build_vocabulary, lsa_fit, tfidf_transform, NgramRange, SparseVector};
use revembed_core::corpus::Polarity;
use revembed_core::eval::{friedman_from_ranks, roc_auc, FriedmanResult, RankTable};
use revembed_core::rng::seeded;
use revembed_core::textprep::{StopWords, TokenizedDoc};
use revembed_core::tlmagg::{aggregate, aggregate_doc, AggregationMode, DocTokens, TokenTensor};

const WORDS: [&str; 12] = [
    "bom", "ruim", "produto", "entrega", "rapida", "atraso", "gostei", "nao", "otimo", "caro", "loja", "veio",
];

pub fn random_corpus(n: usize, seed: u64) -> Vec<TokenizedDoc> {
    let mut rng = seeded(seed);
    (0..n)
        .map(|i| {
            let len = rng.random_range(1..=15);
            let tokens = (0..len)
                .map(|_| WORDS[rng.random_range(0..WORDS.len())].to_string())
                .collect();
            TokenizedDoc::new(format!("d{i}"), tokens)
        })
        .collect()
}

fn ngrams(tokens: &[String], n: usize) -> Vec<String> {
    if tokens.len() < n {
        return Vec::new();
    }
    (0..=tokens.len() - n).map(|i| tokens[i..i + n].join(" ")).collect()
}

/// Largest gap between `tfidf_transform` and `tf * ln(N / df)` computed
/// from raw n-gram counts, over every document and vocabulary entry.
/// Infinite when the vocabulary misses an observed n-gram.
pub fn tfidf_max_deviation(n_docs: usize, seed: u64) -> f64 {
    let docs = random_corpus(n_docs, seed);
    let vocab = build_vocabulary(&docs, NgramRange::new(1, 2).unwrap(), 1, &StopWords::from_lines("")).unwrap();
    let n = docs.len() as f64;
    let counts: Vec<HashMap<String, f64>> = docs
        .iter()
        .map(|d| {
            let mut c = HashMap::new();
            for k in 1..=2 {
                for g in ngrams(&d.tokens, k) {
                    *c.entry(g).or_insert(0.0) += 1.0;
                }
            }
            c
        })
        .collect();
    if counts.iter().flat_map(|c| c.keys()).any(|t| vocab.get(t).is_none()) {
        return f64::INFINITY;
    }
    let mut worst: f64 = 0.0;
    for (doc, doc_counts) in docs.iter().zip(&counts) {
        let v = tfidf_transform(doc, &vocab);
        for (i, term) in vocab.terms().iter().enumerate() {
            let df = counts.iter().filter(|c| c.contains_key(term)).count() as f64;
            let tf = doc_counts.get(term).copied().unwrap_or(0.0);
            worst = worst.max((v.get(i as u32) - tf * (n / df).ln()).abs());
        }
    }
    worst
}

pub fn pair_count_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut gt, mut eq, mut np, mut nn) = (0u64, 0u64, 0u64, 0u64);
    for (i, &li) in labels.iter().enumerate() {
        if li {
            np += 1;
        } else {
            nn += 1;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if li && !lj {
                if scores[i] > scores[j] {
                    gt += 1;
                } else if scores[i] == scores[j] {
                    eq += 1;
                }
            }
        }
    }
    (2 * gt + eq) as f64 / (2 * np * nn) as f64
}

/// Number of `sets` random tied score sets (sizes 2 to 200) on which the
/// rank-sum AUC differs from pair counting in any bit.
pub fn auc_mismatches(sets: usize, seed: u64) -> usize {
    let mut rng = seeded(seed);
    let (mut done, mut bad) = (0, 0);
    while done < sets {
        let n = rng.random_range(2..=200);
        let levels = rng.random_range(2..=50);
        let scores: Vec<f64> = (0..n)
            .map(|_| rng.random_range(0..levels) as f64 / levels as f64)
            .collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
            continue;
        }
        let pol: Vec<Polarity> = labels.iter().map(|&l| Polarity::from_u8(l as u8).unwrap()).collect();
        if roc_auc(&scores, &pol).ok() != Some(pair_count_auc(&scores, &labels)) {
            bad += 1;
        }
        done += 1;
    }
    bad
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, largest
/// first.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    eig
}

pub fn random_sparse(rows: usize, cols: usize, density: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = seeded(seed);
    (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| {
                    if rng.random_bool(density) {
                        rng.random_range(0.1..3.0)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

pub fn gram(dense: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = dense[0].len();
    (0..d)
        .map(|i| (0..d).map(|j| dense.iter().map(|r| r[i] * r[j]).sum()).collect())
        .collect()
}

pub fn to_sparse(dense: &[Vec<f64>]) -> Vec<SparseVector> {
    dense.iter().map(|r| SparseVector::from_dense(r)).collect()
}

/// Worst relative gap between the top-`r` LSA singular values of a
/// `rows x cols` sparse matrix and the square roots of its Gram
/// eigenvalues.
pub fn lsa_singular_value_error(rows: usize, cols: usize, r: usize, seed: u64) -> f64 {
    let dense = random_sparse(rows, cols, 0.2, seed);
    let model = lsa_fit(&to_sparse(&dense), r).unwrap();
    let eig = jacobi_eigenvalues(gram(&dense));
    let mut worst: f64 = 0.0;
    for (k, &s) in model.singular_values().iter().enumerate() {
        let want = eig[k].max(0.0).sqrt();
        worst = worst.max(((s - want) / want).abs());
    }
    worst
}

/// Reconstruction errors for every rank from 1 to `min(rows, cols)`.
pub fn reconstruction_errors(rows: usize, cols: usize, seed: u64) -> Vec<f64> {
    let sparse = to_sparse(&random_sparse(rows, cols, 0.3, seed));
    (1..=rows.min(cols))
        .map(|r| lsa_fit(&sparse, r).unwrap().reconstruction_error(&sparse).unwrap())
        .collect()
}

pub fn naive_aggregate(tokens: &[Vec<f64>], mode: AggregationMode) -> Vec<f64> {
    let d = tokens[0].len();
    let stat = |range: &[Vec<f64>], k: usize| -> (f64, f64, f64, f64) {
        if range.is_empty() {
            return (0.0, 0.0, 0.0, 0.0);
        }
        let mut sum = 0.0;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for t in range {
            sum += t[k];
            lo = lo.min(t[k]);
            hi = hi.max(t[k]);
        }
        let mean = sum / range.len() as f64;
        let mut ss = 0.0;
        for t in range {
            ss += (t[k] - mean) * (t[k] - mean);
        }
        (mean, (ss / range.len() as f64).sqrt(), lo, hi)
    };
    let mut out = Vec::new();
    match mode {
        AggregationMode::First => out.extend(&tokens[0]),
        AggregationMode::Last => out.extend(&tokens[tokens.len() - 1]),
        AggregationMode::MeanAll => (0..d).for_each(|k| out.push(stat(tokens, k).0)),
        AggregationMode::FirstMeanStd => {
            out.extend(&tokens[0]);
            (0..d).for_each(|k| out.push(stat(&tokens[1..], k).0));
            (0..d).for_each(|k| out.push(stat(&tokens[1..], k).1));
        }
        AggregationMode::MeanMinMax => {
            (0..d).for_each(|k| out.push(stat(tokens, k).0));
            (0..d).for_each(|k| out.push(stat(tokens, k).2));
            (0..d).for_each(|k| out.push(stat(tokens, k).3));
        }
    }
    out
}

#[derive(Debug, Default, Clone, Copy)]
pub struct AggregationCheck {
    pub max_deviation: f64,
    /// Every output had `output_dim(dim)` components.
    pub dims_ok: bool,
    /// Overwriting pads with adversarial values changed nothing.
    pub pad_invariant: bool,
}

/// Every mode on `trials` random tensors against [`naive_aggregate`],
/// plus a pad-overwrite comparison per document.
pub fn aggregation_check(trials: usize, seed: u64) -> AggregationCheck {
    const ADVERSARIAL: [f32; 5] = [f32::MAX, f32::MIN, f32::NAN, f32::INFINITY, -1e30];
    let mut rng = seeded(seed);
    let mut out = AggregationCheck {
        max_deviation: 0.0,
        dims_ok: true,
        pad_invariant: true,
    };
    for _ in 0..trials {
        let (n_docs, n_tokens, dim) = (rng.random_range(1..6), rng.random_range(1..9), rng.random_range(1..7));
        let lengths: Vec<u32> = (0..n_docs).map(|_| rng.random_range(1..=n_tokens as u32)).collect();
        let payload: Vec<f32> = (0..n_docs * n_tokens * dim)
            .map(|_| rng.random_range(-5.0f32..5.0))
            .collect();
        let tensor = TokenTensor::new(n_tokens, dim, lengths.clone(), payload.clone()).unwrap();
        for (d, &len) in lengths.iter().enumerate() {
            let block = &payload[d * n_tokens * dim..(d + 1) * n_tokens * dim];
            let tokens: Vec<Vec<f64>> = (0..len as usize)
                .map(|t| block[t * dim..(t + 1) * dim].iter().map(|&x| x as f64).collect())
                .collect();
            let mut padded = block.to_vec();
            for (i, v) in padded[len as usize * dim..].iter_mut().enumerate() {
                *v = ADVERSARIAL[(i + d) % ADVERSARIAL.len()];
            }
            for mode in AggregationMode::ALL {
                let got = aggregate(&tensor, d, mode).unwrap().values;
                let want = naive_aggregate(&tokens, mode);
                out.dims_ok &= got.len() == mode.output_dim(dim) && want.len() == got.len();
                for (a, b) in got.iter().zip(&want) {
                    out.max_deviation = out.max_deviation.max((a - b).abs());
                }
                let again = aggregate_doc(DocTokens::new(&padded, len as usize, dim).unwrap(), mode).values;
                out.pad_invariant &= again.iter().zip(&got).all(|(a, b)| a.to_bits() == b.to_bits());
            }
        }
    }
    out
}

/// Friedman on a fixed tie-free 4 x 3 rank table, with the closed-form
/// statistic `12 / (n k (k+1)) * sum R_j^2 - 3 n (k+1)`.
pub fn friedman_4x3() -> (FriedmanResult, f64) {
    let ranks = vec![
        vec![1.0, 2.0, 3.0],
        vec![1.0, 3.0, 2.0],
        vec![2.0, 1.0, 3.0],
        vec![1.0, 2.0, 3.0],
    ];
    let table = RankTable::new(
        vec!["a".into(), "b".into(), "c".into()],
        (0..4).map(|i| format!("b{i}")).collect(),
        ranks,
    )
    .unwrap();
    let r = friedman_from_ranks(&table).unwrap();
    // column sums 5, 8, 11
    let (n, k) = (4.0, 3.0);
    let want = 12.0 / (n * k * (k + 1.0)) * (25.0 + 64.0 + 121.0) - 3.0 * n * (k + 1.0);
    (r, want)
}
