//! Exact P-matrix decision by principal-minor enumeration.
//!
//! Index sets are 0-based throughout.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::{DenseMatrix, DiagonalMatrix};

/// Largest dimension accepted by [`is_p_matrix`]; enumeration visits `2ⁿ − 1`
/// subsets.
pub const MAX_P_DIM: usize = 14;

/// Relative band around zero inside which a minor counts as marginal.
pub const MINOR_REL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PMatrixReport {
    pub is_p: bool,
    /// First failing index set, ordered by size then lexicographically.
    pub failing_subset: Vec<usize>,
    pub failing_minor: f64,
    /// The failing minor lies within the tolerance band rather than clearly
    /// below zero.
    pub marginal: bool,
}

impl PMatrixReport {
    fn pass() -> Self {
        Self {
            is_p: true,
            failing_subset: Vec::new(),
            failing_minor: 0.0,
            marginal: false,
        }
    }
}

pub fn is_p_matrix(m: &DenseMatrix) -> Result<PMatrixReport> {
    let n = m.ensure_square("P-matrix test input")?;
    if n > MAX_P_DIM {
        return Err(Error::Size {
            what: "P-matrix dimension",
            got: n,
            limit: MAX_P_DIM,
        });
    }
    for k in 1..=n {
        let mut subset: Vec<usize> = (0..k).collect();
        loop {
            let sub = m.principal_submatrix(&subset);
            let minor = sub.determinant()?;
            let band = MINOR_REL_TOL * hadamard_bound(&sub);
            if minor <= band {
                return Ok(PMatrixReport {
                    is_p: false,
                    failing_subset: subset,
                    failing_minor: minor,
                    marginal: minor > -band,
                });
            }
            if !next_combination(&mut subset, n) {
                break;
            }
        }
    }
    Ok(PMatrixReport::pass())
}

/// Product of row norms: an upper bound on `|det|` that sets the scale of the
/// zero band.
fn hadamard_bound(m: &DenseMatrix) -> f64 {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
        .product()
}

/// Advances `subset` to the next k-combination of `0..n` in lexicographic
/// order. Returns false once exhausted.
fn next_combination(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    let Some(i) = (0..k).rev().find(|&i| subset[i] < n - k + i) else {
        return false;
    };
    subset[i] += 1;
    for j in i + 1..k {
        subset[j] = subset[j - 1] + 1;
    }
    true
}

/// Some index `i` with `xᵢ (Mx)ᵢ > 0`, or `None` when no such index exists,
/// which certifies that `M` is not a P-matrix.
pub fn p_sign_witness(m: &DenseMatrix, x: &[f64]) -> Result<Option<usize>> {
    if x.iter().all(|&v| v == 0.0) {
        return Err(Error::Contract("sign witness needs a nonzero vector".into()));
    }
    let mx = m.matvec(x)?;
    Ok(x.iter().zip(&mx).position(|(xi, yi)| xi * yi > 0.0))
}

/// `D M D` for a positive diagonal `D`.
pub fn dpd_conjugate(m: &DenseMatrix, d: &DiagonalMatrix) -> Result<DenseMatrix> {
    let n = m.ensure_square("conjugated matrix")?;
    if d.len() != n {
        return Err(Error::Dimension(format!("diagonal of length {} for {n}x{n}", d.len())));
    }
    d.ensure_positive("D")?;
    Ok(d.right_mul(&d.left_mul(m)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn identity_is_p() {
        assert!(is_p_matrix(&DenseMatrix::identity(3)).unwrap().is_p);
    }

    #[test]
    fn indefinite_two_by_two() {
        let r = is_p_matrix(&m(&[&[1.0, 2.0], &[2.0, 1.0]])).unwrap();
        assert!(!r.is_p);
        assert_eq!(r.failing_subset, vec![0, 1]);
        assert_eq!(r.failing_minor, -3.0);
        assert!(!r.marginal);
    }

    #[test]
    fn tridiagonal_is_p() {
        assert!(is_p_matrix(&m(&[&[2.0, -1.0], &[-1.0, 2.0]])).unwrap().is_p);
    }

    #[test]
    fn zero_minor_is_marginal_failure() {
        let r = is_p_matrix(&m(&[&[1.0, 1.0], &[1.0, 1.0]])).unwrap();
        assert!(!r.is_p);
        assert!(r.marginal);
    }

    #[test]
    fn subset_order_is_size_then_lex() {
        // 1x1 minors pass, {0,2} is the first failing pair.
        let a = m(&[&[1.0, 0.0, 2.0], &[0.0, 1.0, 0.0], &[2.0, 0.0, 1.0]]);
        assert_eq!(is_p_matrix(&a).unwrap().failing_subset, vec![0, 2]);
        let b = m(&[&[1.0, 0.0, 0.0], &[0.0, -1.0, 0.0], &[0.0, 0.0, -1.0]]);
        assert_eq!(is_p_matrix(&b).unwrap().failing_subset, vec![1]);
    }

    #[test]
    fn size_guard() {
        let err = is_p_matrix(&DenseMatrix::identity(MAX_P_DIM + 1)).unwrap_err();
        assert!(matches!(err, Error::Size { .. }));
    }

    #[test]
    fn sign_witness_examples() {
        assert_eq!(p_sign_witness(&DenseMatrix::identity(2), &[1.0, 0.0]).unwrap(), Some(0));
        let neg = DenseMatrix::identity(3).scale(-1.0);
        assert_eq!(p_sign_witness(&neg, &[1.0, -2.0, 0.5]).unwrap(), None);
        let a = m(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert_eq!(p_sign_witness(&a, &[1.0, -1.0]).unwrap(), None);
        assert!(p_sign_witness(&a, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn dpd_examples() {
        let a = m(&[&[2.0, -1.0], &[-1.0, 2.0]]);
        assert_eq!(dpd_conjugate(&a, &DiagonalMatrix::identity(2)).unwrap(), a);
        let scaled = dpd_conjugate(&a, &DiagonalMatrix::new(vec![2.0, 3.0])).unwrap();
        assert_eq!(scaled, m(&[&[8.0, -6.0], &[-6.0, 18.0]]));
        assert!(is_p_matrix(&scaled).unwrap().is_p);

        let not_p = m(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let scaled = dpd_conjugate(&not_p, &DiagonalMatrix::new(vec![1.0, 2.0])).unwrap();
        assert!(!is_p_matrix(&scaled).unwrap().is_p);

        assert!(dpd_conjugate(&a, &DiagonalMatrix::new(vec![1.0, 0.0])).is_err());
    }
}
