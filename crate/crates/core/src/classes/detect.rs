//! Zero-pattern and sign-pattern detection of the structured classes, with
//! the signature matrices `D`, `E` that carry each class to a Metzler,
//! nonnegative pair.

use crate::matcore::{is_metzler, is_nonnegative, DenseMatrix};
use crate::riccati::MatrixPair;

use super::{AForm, ClassTag};

/// `+1` for `x ≥ 0`, `−1` otherwise.
pub(crate) fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

pub(crate) struct Detection {
    pub tag: ClassTag,
    pub signatures: Option<(Vec<f64>, Vec<f64>)>,
}

pub(crate) fn detect(pair: &MatrixPair) -> Detection {
    let (a, b) = (pair.a(), pair.b());
    let n = pair.n();

    if is_metzler(a) && is_nonnegative(b) {
        return Detection {
            tag: ClassTag::MetzlerNonneg,
            signatures: Some((vec![1.0; n], vec![1.0; n])),
        };
    }

    if let Some(k) = single_nonzero_row(b) {
        let row = b.row(k).to_vec();
        if is_metzler(a) {
            let d = vec![1.0; n];
            if let Some(e) = column_signs(b, &d) {
                return Detection {
                    tag: ClassTag::MetzlerRankOneRow { k, b: row },
                    signatures: Some((d, e)),
                };
            }
        }
        if let Some(d) = tridiagonal_signs(a) {
            if let Some(e) = column_signs(b, &d) {
                return Detection {
                    tag: ClassTag::TridiagSignSym {
                        k,
                        b: row,
                        a: a.diagonal(),
                        l: (0..n - 1).map(|i| a[(i + 1, i)]).collect(),
                        u: (0..n - 1).map(|i| a[(i, i + 1)]).collect(),
                    },
                    signatures: Some((d, e)),
                };
            }
        }
    }

    if let Some(k) = single_nonzero_col(b) {
        if let Some(d) = last_row_signs(a) {
            if let Some(e) = column_signs(b, &d) {
                return Detection {
                    tag: ClassTag::LastRowForm {
                        k,
                        b: (0..n).map(|i| b[(i, k)]).collect(),
                        a: a.diagonal(),
                        c: a.row(n - 1)[..n - 1].to_vec(),
                    },
                    signatures: Some((d, e)),
                };
            }
        }
    }

    if is_superdiagonal(b) {
        let forms = [
            (AForm::Metzler, is_metzler(a).then(|| vec![1.0; n])),
            (AForm::Tridiagonal, tridiagonal_signs(a)),
            (AForm::LastRow, last_row_signs(a)),
        ];
        for (form, d) in forms {
            if let Some(d) = d {
                if let Some(e) = column_signs(b, &d) {
                    return Detection {
                        tag: ClassTag::SuperdiagB {
                            a_form: form,
                            b: (0..n - 1).map(|i| b[(i, i + 1)]).collect(),
                        },
                        signatures: Some((d, e)),
                    };
                }
            }
        }
    }

    if let Some(tag) = three_by_three_ab1(pair) {
        return Detection { tag, signatures: None };
    }
    if let Some(tag) = three_by_three_ab2(pair) {
        return Detection { tag, signatures: None };
    }
    Detection {
        tag: ClassTag::Unstructured,
        signatures: None,
    }
}

fn nonzero_rows(m: &DenseMatrix) -> Vec<usize> {
    (0..m.rows()).filter(|&i| m.row(i).iter().any(|&v| v != 0.0)).collect()
}

/// `Some(k)` when `m = e_k bᵀ`; the zero matrix reports `k = 0`.
fn single_nonzero_row(m: &DenseMatrix) -> Option<usize> {
    match nonzero_rows(m).as_slice() {
        [] => Some(0),
        [k] => Some(*k),
        _ => None,
    }
}

/// `Some(k)` when `m = b e_kᵀ`.
fn single_nonzero_col(m: &DenseMatrix) -> Option<usize> {
    let cols: Vec<usize> = (0..m.cols())
        .filter(|&j| (0..m.rows()).any(|i| m[(i, j)] != 0.0))
        .collect();
    match cols.as_slice() {
        [] => Some(0),
        [k] => Some(*k),
        _ => None,
    }
}

fn is_superdiagonal(m: &DenseMatrix) -> bool {
    let n = m.rows();
    (0..n).all(|i| (0..n).all(|j| j == i + 1 || m[(i, j)] == 0.0))
}

/// Signature `D` with `DAD` Metzler for a tridiagonal `A` whose
/// off-diagonal pairs satisfy `lᵢuᵢ ≥ 0`.
fn tridiagonal_signs(a: &DenseMatrix) -> Option<Vec<f64>> {
    let n = a.rows();
    let banded = (0..n).all(|i| (0..n).all(|j| i.abs_diff(j) <= 1 || a[(i, j)] == 0.0));
    if !banded {
        return None;
    }
    let mut d = vec![1.0; n];
    for i in 1..n {
        let (l, u) = (a[(i, i - 1)], a[(i - 1, i)]);
        if l * u < 0.0 {
            return None;
        }
        // The sign of whichever off-diagonal entry is nonzero; sign(0) alone
        // would break when l = 0 and u < 0.
        let s = if l != 0.0 { sign(l) } else { sign(u) };
        d[i] = s * d[i - 1];
    }
    Some(d)
}

/// Signature `D` with `DAD` Metzler for `A` that is diagonal apart from its
/// last row.
fn last_row_signs(a: &DenseMatrix) -> Option<Vec<f64>> {
    let n = a.rows();
    let shaped = (0..n - 1).all(|i| (0..n).all(|j| i == j || a[(i, j)] == 0.0));
    if !shaped {
        return None;
    }
    let mut d: Vec<f64> = a.row(n - 1)[..n - 1].iter().map(|&c| sign(c)).collect();
    d.push(1.0);
    Some(d)
}

/// Signature `E` with `DBE = B̄`, one sign per column. Fails when the
/// nonzero entries of some column disagree in the sign of `dᵢbᵢⱼ`.
fn column_signs(b: &DenseMatrix, d: &[f64]) -> Option<Vec<f64>> {
    (0..b.cols())
        .map(|j| {
            let mut e = None;
            for (i, di) in d.iter().enumerate() {
                let v = b[(i, j)];
                if v == 0.0 {
                    continue;
                }
                let s = sign(di * v);
                match e {
                    Some(prev) if prev != s => return None,
                    _ => e = Some(s),
                }
            }
            Some(e.unwrap_or(1.0))
        })
        .collect()
}

fn b_pattern_3ab(b: &DenseMatrix) -> Option<[f64; 2]> {
    let allowed = |i: usize, j: usize| j == 2 && i < 2;
    let ok = (0..3).all(|i| (0..3).all(|j| allowed(i, j) || b[(i, j)] == 0.0));
    ok.then(|| [b[(0, 2)], b[(1, 2)]])
}

pub(crate) fn three_by_three_ab1(pair: &MatrixPair) -> Option<ClassTag> {
    let (a, b) = (pair.a(), pair.b());
    if pair.n() != 3 {
        return None;
    }
    let zero = [(0, 1), (0, 2), (1, 2), (2, 0)];
    if zero.iter().any(|&ij| a[ij] != 0.0) {
        return None;
    }
    Some(ClassTag::ThreeByThreeAb1 {
        a: [a[(0, 0)], a[(1, 1)], a[(2, 2)]],
        b: b_pattern_3ab(b)?,
        c: [a[(1, 0)], a[(2, 1)]],
    })
}

pub(crate) fn three_by_three_ab2(pair: &MatrixPair) -> Option<ClassTag> {
    let (a, b) = (pair.a(), pair.b());
    if pair.n() != 3 {
        return None;
    }
    let zero = [(0, 1), (0, 2), (1, 0), (1, 2)];
    if zero.iter().any(|&ij| a[ij] != 0.0) {
        return None;
    }
    Some(ClassTag::ThreeByThreeAb2 {
        a: [a[(0, 0)], a[(1, 1)], a[(2, 2)]],
        b: b_pattern_3ab(b)?,
        c: [a[(2, 0)], a[(2, 1)]],
    })
}
