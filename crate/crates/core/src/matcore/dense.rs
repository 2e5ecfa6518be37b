use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Dense real matrix stored row-major.
///
/// Serialized as a JSON array of rows, e.g. `[[1, 2], [3, 4]]`.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![1.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major data, rejecting empty shapes and
    /// non-finite entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension("matrix must have at least one row and column".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!(
                "non-finite entry at ({}, {})",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged matrix literal".into()));
        }
        Self::from_row_major(r, c, rows.iter().flatten().copied().collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Maximum absolute row sum; bounds the spectral radius.
    pub fn inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub(crate) fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.ensure_same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub(crate) fn ensure_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "shapes {}x{} and {}x{} differ",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub(crate) fn ensure_square(&self, what: &str) -> Result<usize> {
        if !self.is_square() {
            return Err(Error::Dimension(format!(
                "{what} must be square, got {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(self.rows)
    }

    /// Symmetric part `(M + Mᵀ)/2`.
    pub fn symmetric_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let tol = rel_tol * self.frobenius_norm();
        (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    /// Principal submatrix on the given (sorted) index set.
    pub fn principal_submatrix(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), idx.len(), |i, j| self[(idx[i], idx[j])])
    }

    /// Copies `block` into `self` with its top-left corner at `(r0, c0)`.
    pub(crate) fn set_block(&mut self, r0: usize, c0: usize, block: &Self) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    pub(crate) fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn determinant(&self) -> Result<f64> {
        let n = self.ensure_square("determinant input")?;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, a[i * n + k]))
                .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
                .expect("non-empty pivot range");
            if pivot == 0.0 {
                return Ok(0.0);
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                det = -det;
            }
            det *= pivot;
            for i in k + 1..n {
                let f = a[i * n + k] / pivot;
                if f != 0.0 {
                    for j in k + 1..n {
                        a[i * n + j] -= f * a[k * n + j];
                    }
                }
            }
        }
        Ok(det)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

// Operator forms panic on shape mismatch; the checked_* methods return errors.
impl Add for &DenseMatrix {
    type Output = DenseMatrix;

    fn add(self, rhs: Self) -> DenseMatrix {
        self.checked_add(rhs).expect("matrix addition shape mismatch")
    }
}

impl Sub for &DenseMatrix {
    type Output = DenseMatrix;

    fn sub(self, rhs: Self) -> DenseMatrix {
        self.checked_sub(rhs).expect("matrix subtraction shape mismatch")
    }
}

impl Mul for &DenseMatrix {
    type Output = DenseMatrix;

    fn mul(self, rhs: Self) -> DenseMatrix {
        self.matmul(rhs).expect("matrix product shape mismatch")
    }
}

impl Neg for &DenseMatrix {
    type Output = DenseMatrix;

    fn neg(self) -> DenseMatrix {
        self.map(|v| -v)
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.data.chunks(self.cols)).finish()
    }
}

impl Serialize for DenseMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DenseMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        Self::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Diagonal matrix `diag(d₁, …, dₙ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DiagonalMatrix(Vec<f64>);

impl DiagonalMatrix {
    pub fn new(diag: Vec<f64>) -> Self {
        Self(diag)
    }

    pub fn identity(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn is_positive(&self) -> bool {
        self.0.iter().all(|&d| d > 0.0)
    }

    pub fn is_signature(&self) -> bool {
        self.0.iter().all(|&d| d == 1.0 || d == -1.0)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.0.len();
        DenseMatrix::from_fn(n, n, |i, j| if i == j { self.0[i] } else { 0.0 })
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.iter().map(|d| 1.0 / d).collect())
    }

    pub fn mul_diag(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect())
    }

    /// `self · M`: scales row `i` of `m` by `dᵢ`.
    pub fn left_mul(&self, m: &DenseMatrix) -> DenseMatrix {
        DenseMatrix::from_fn(m.rows(), m.cols(), |i, j| self.0[i] * m[(i, j)])
    }

    /// `M · self`: scales column `j` of `m` by `dⱼ`.
    pub fn right_mul(&self, m: &DenseMatrix) -> DenseMatrix {
        DenseMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)] * self.0[j])
    }

    pub(crate) fn ensure_positive(&self, what: &str) -> Result<()> {
        match self.0.iter().position(|&d| !(d > 0.0 && d.is_finite())) {
            Some(i) => Err(Error::Contract(format!(
                "{what} must be positive definite; entry {i} is {}",
                self.0[i]
            ))),
            None => Ok(()),
        }
    }
}

/// Hadamard (entrywise) product.
pub fn hadamard(x: &DenseMatrix, y: &DenseMatrix) -> Result<DenseMatrix> {
    x.zip_with(y, |a, b| a * b)
}

/// Returns `(Ĉ, C̄)`: `Ĉ` keeps the diagonal and takes absolute values off
/// the diagonal, `C̄` is the entrywise absolute value.
pub fn hat_bar(c: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    c.ensure_square("hat_bar input")?;
    let hat = DenseMatrix::from_fn(c.rows(), c.cols(), |i, j| {
        if i == j {
            c[(i, j)]
        } else {
            c[(i, j)].abs()
        }
    });
    Ok((hat, c.map(f64::abs)))
}

/// Nonnegative off-diagonal entries. Non-square input is never Metzler.
pub fn is_metzler(a: &DenseMatrix) -> bool {
    a.is_square() && (0..a.rows()).all(|i| (0..a.cols()).all(|j| i == j || a[(i, j)] >= 0.0))
}

pub fn is_nonnegative(b: &DenseMatrix) -> bool {
    b.as_slice().iter().all(|&v| v >= 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn hadamard_examples() {
        let x = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let y = m(&[&[2.0, 0.0], &[0.0, 2.0]]);
        assert_eq!(hadamard(&x, &y).unwrap(), m(&[&[2.0, 0.0], &[0.0, 8.0]]));
        assert_eq!(hadamard(&DenseMatrix::ones(2, 2), &x).unwrap(), x);
        assert_eq!(
            hadamard(&DenseMatrix::identity(2), &x).unwrap(),
            m(&[&[1.0, 0.0], &[0.0, 4.0]])
        );
    }

    #[test]
    fn hadamard_shape_mismatch() {
        let err = hadamard(&DenseMatrix::identity(2), &DenseMatrix::identity(3)).unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn hat_bar_examples() {
        let c = m(&[&[-1.0, -2.0], &[3.0, -4.0]]);
        let (hat, bar) = hat_bar(&c).unwrap();
        assert_eq!(hat, m(&[&[-1.0, 2.0], &[3.0, -4.0]]));
        assert_eq!(bar, m(&[&[1.0, 2.0], &[3.0, 4.0]]));

        let metzler = m(&[&[-1.0, 0.5], &[0.0, -2.0]]);
        assert_eq!(hat_bar(&metzler).unwrap().0, metzler);

        let z = DenseMatrix::zeros(3, 3);
        assert_eq!(hat_bar(&z).unwrap(), (z.clone(), z));
    }

    #[test]
    fn metzler_and_nonnegative() {
        assert!(is_metzler(&m(&[&[-1.0, 0.5], &[0.0, -2.0]])));
        assert!(!is_metzler(&m(&[&[-1.0, -0.1], &[0.0, -2.0]])));
        assert!(is_nonnegative(&m(&[&[0.0, 1.0], &[2.0, 0.0]])));
        assert!(!is_nonnegative(&m(&[&[0.0, -1.0], &[2.0, 0.0]])));
    }

    #[test]
    fn rejects_bad_literals() {
        assert!(DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
        assert!(DenseMatrix::from_rows(&[vec![f64::NAN]]).is_err());
        assert!(DenseMatrix::from_rows(&[]).is_err());
        let parsed: DenseMatrix = serde_json::from_str("[[1, 2], [3, 4.5]]").unwrap();
        assert_eq!(parsed[(1, 1)], 4.5);
        assert_eq!(serde_json::to_string(&parsed).unwrap(), "[[1.0,2.0],[3.0,4.5]]");
    }

    #[test]
    fn determinant_small() {
        assert_eq!(m(&[&[1.0, 2.0], &[2.0, 1.0]]).determinant().unwrap(), -3.0);
        assert_eq!(m(&[&[0.0, 1.0], &[1.0, 0.0]]).determinant().unwrap(), -1.0);
        assert_eq!(DenseMatrix::zeros(3, 3).determinant().unwrap(), 0.0);
    }
}
