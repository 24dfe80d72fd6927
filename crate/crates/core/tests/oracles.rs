//! Library routines against independent brute-force evaluations.

mod support;

use support::oracle::*;

use revembed_core::bow::lsa_fit;

#[test]
fn tfidf_matches_direct_evaluation() {
    for seed in [7, 8, 9] {
        let worst = tfidf_max_deviation(20, seed);
        assert!(worst <= 1e-12, "seed {seed}: {worst:e}");
    }
}

#[test]
fn auc_matches_pair_counting_exactly() {
    assert_eq!(auc_mismatches(1000, 2024), 0);
}

#[test]
fn lsa_singular_values_match_dense_eigen_oracle() {
    for seed in 0..5 {
        let err = lsa_singular_value_error(50, 30, 5, seed);
        assert!(err < 1e-6, "seed {seed}: {err:e}");
    }
}

#[test]
fn lsa_small_matrix_within_1e8() {
    let dense = random_sparse(6, 4, 0.9, 99);
    let model = lsa_fit(&to_sparse(&dense), 3).unwrap();
    let eig = jacobi_eigenvalues(gram(&dense));
    for (k, &s) in model.singular_values().iter().enumerate() {
        assert!((s - eig[k].sqrt()).abs() < 1e-8);
    }
}

#[test]
fn reconstruction_error_is_non_increasing_in_rank() {
    for (rows, cols, seed) in [(10, 8, 1), (50, 30, 2)] {
        let errors = reconstruction_errors(rows, cols, seed);
        for w in errors.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{rows}x{cols}: {errors:?}");
        }
        assert!(errors[errors.len() - 1] < 1e-8);
    }
}

#[test]
fn aggregation_matches_naive_oracle() {
    let check = aggregation_check(20, 31);
    assert!(check.max_deviation < 1e-12, "{check:?}");
    assert!(check.dims_ok && check.pad_invariant, "{check:?}");
}

#[test]
fn friedman_hand_computed_4x3() {
    let (r, want) = friedman_4x3();
    assert!((r.chi2 - want).abs() < 1e-10);
    assert_eq!(r.df, 2);
    // chi-square(2) tail is exp(-x/2)
    assert!((r.p_value - (-want / 2.0).exp()).abs() < 1e-12);
}
