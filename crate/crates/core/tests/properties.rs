use diagstab_core::classes::{lag_bound, lag_bound_oracle};
use diagstab_core::matcore::{spectral_abscissa, BlockSymmetric, DenseMatrix, DiagonalMatrix};
use diagstab_core::pmatrix::{dpd_conjugate, is_p_matrix};
use diagstab_core::riccati::{
    block_lmi, solve_diagonal, verify_certificate, MatrixPair, SolverOptions,
};
use diagstab_core::transforms::{dscale_with_certificate, hadamard_congruence, normalize_correlation};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn square(max: usize) -> impl Strategy<Value = DenseMatrix> {
    (1..=max).prop_flat_map(|n| {
        prop::collection::vec(-3.0f64..3.0, n * n).prop_map(move |v| {
            DenseMatrix::from_rows(&v.chunks(n).map(<[f64]>::to_vec).collect::<Vec<_>>()).unwrap()
        })
    })
}

/// Pairs with a dominant negative diagonal, most of them feasible.
fn dominant_pair() -> impl Strategy<Value = MatrixPair> {
    (2usize..=4).prop_flat_map(|n| {
        (
            prop::collection::vec(-2.0f64..2.0, n * n),
            prop::collection::vec(-2.0f64..2.0, n * n),
            prop::collection::vec(1.2f64..2.0, n),
        )
            .prop_map(move |(a, b, stretch)| {
                let mut a = DenseMatrix::from_fn(n, n, |i, j| a[i * n + j]);
                let b = DenseMatrix::from_fn(n, n, |i, j| b[i * n + j]);
                for i in 0..n {
                    let off: f64 = (0..n)
                        .map(|j| b[(i, j)].abs() + if j == i { 0.0 } else { a[(i, j)].abs() })
                        .sum();
                    a[(i, i)] = -stretch[i] * off - 0.5;
                }
                MatrixPair::new(a, b).unwrap()
            })
    })
}

fn positive(n: usize) -> impl Strategy<Value = DiagonalMatrix> {
    prop::collection::vec(0.2f64..5.0, n).prop_map(DiagonalMatrix::new)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn abscissa_matches_dense_eigenvalues(m in square(5)) {
        let reference = na(&m).complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let ours = spectral_abscissa(&m).unwrap();
        // Close eigenvalues lose accuracy like the square root of rounding.
        prop_assert!((ours - reference).abs() <= 1e-5 * (1.0 + m.inf_norm()), "{ours} vs {reference}");
    }

    #[test]
    fn p_status_survives_dmd(m in square(5), seed in prop::collection::vec(0.2f64..5.0, 5)) {
        let d = DiagonalMatrix::new(seed[..m.rows()].to_vec());
        let before = is_p_matrix(&m).unwrap();
        let after = is_p_matrix(&dpd_conjugate(&m, &d).unwrap()).unwrap();
        prop_assume!(!before.marginal && !after.marginal);
        prop_assert_eq!(before.is_p, after.is_p);
    }

    #[test]
    fn certificates_verify_independently(pair in dominant_pair()) {
        let verdict = solve_diagonal(&pair, &SolverOptions::default()).unwrap();
        prop_assert!(!verdict.is_refuted());
        if let Some(c) = verdict.certificate() {
            let block = na(block_lmi(&pair, &c.p, &c.q).unwrap().full());
            prop_assert!(block.symmetric_eigenvalues().max() < 0.0);
            prop_assert!(c.margin > 0.0);
        }
    }

    #[test]
    fn row_scaling_keeps_block_form(pair in dominant_pair(), d in positive(4)) {
        let verdict = solve_diagonal(&pair, &SolverOptions::default()).unwrap();
        prop_assume!(verdict.is_feasible());
        let cert = verdict.certificate().unwrap();
        let d = DiagonalMatrix::new(d.entries()[..pair.n()].to_vec());
        let (scaled, mapped) = dscale_with_certificate(&pair, &d, cert).unwrap();
        let before = na(block_lmi(&pair, &cert.p, &cert.q).unwrap().full());
        let after = na(block_lmi(&scaled, &mapped.p, &mapped.q).unwrap().full());
        prop_assert!((before - after).abs().max() <= 1e-10);
    }

    #[test]
    fn all_ones_correlation_is_identity_map(pair in dominant_pair()) {
        let n = pair.n();
        let ones = BlockSymmetric::new(DenseMatrix::ones(2 * n, 2 * n)).unwrap();
        prop_assert_eq!(hadamard_congruence(&pair, &ones).unwrap(), pair);
    }

    #[test]
    fn normalized_gram_has_unit_diagonal(g in square(4), scale in positive(8)) {
        let n = g.rows();
        // Gram of [G; H] with H a rescaled copy, so both diagonal blocks match.
        let stacked = DenseMatrix::from_fn(2 * n, n, |i, j| {
            g[(i % n, j)] + if i % n == j { 1.0 } else { 0.0 }
        });
        let gram = stacked.matmul(&stacked.transpose()).unwrap();
        let s = scale.entries();
        let full = DenseMatrix::from_fn(2 * n, 2 * n, |i, j| s[i % n] * gram[(i, j)] * s[j % n]);
        let unit = normalize_correlation(&BlockSymmetric::new(full.symmetric_part()).unwrap()).unwrap();
        prop_assert!(unit.full().diagonal().iter().all(|&d| d == 1.0));
        prop_assert!(unit.lambda_min().unwrap() >= -1e-10);
    }

    #[test]
    fn grid_never_exceeds_bound(c in -3.0f64..3.0, d in -3.0f64..3.0) {
        prop_assume!(c.abs() > 1e-3 && d.abs() > 1e-3);
        let bound = lag_bound(c, d).unwrap();
        let grid = lag_bound_oracle(c, d, 0.1).unwrap();
        prop_assert!(grid <= bound + 1e-9);
        prop_assert!(grid >= bound - 0.3);
    }
}

#[test]
fn verify_rejects_wrong_sizes() {
    let pair = MatrixPair::from_rows(&[vec![-2.0]], &[vec![1.0]]).unwrap();
    let p = DiagonalMatrix::new(vec![1.0, 1.0]);
    assert!(verify_certificate(&pair, &p, &p, 0.0).is_err());
}
