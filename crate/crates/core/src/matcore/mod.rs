//! Dense matrix arithmetic, structural predicates, and the two eigenvalue
//! engines the rest of the crate builds on.

mod dense;
mod eigen;
mod hurwitz;

pub use dense::{hadamard, hat_bar, is_metzler, is_nonnegative, DenseMatrix, DiagonalMatrix};
pub(crate) use eigen::jacobi;
pub use eigen::{
    is_negative_definite, is_psd, lambda_max, lambda_min, sym_eigen, sym_spectrum, Spectrum,
    SymEigen, JACOBI_MAX_SWEEPS, JACOBI_TOL, SYMMETRY_TOL,
};
pub use hurwitz::{
    characteristic_polynomial, is_hurwitz, is_hurwitz_with_margin, routh_pivots,
    shift_polynomial, spectral_abscissa, HurwitzReport, HurwitzStatus, DEFAULT_HURWITZ_MARGIN,
};

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Symmetric `2n × 2n` matrix viewed as the blocks `[[B11, B12], [B12ᵀ, B22]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockSymmetric {
    n: usize,
    full: DenseMatrix,
}

impl BlockSymmetric {
    pub fn new(full: DenseMatrix) -> Result<Self> {
        let size = full.ensure_square("block matrix")?;
        if size % 2 != 0 {
            return Err(Error::Dimension(format!("block matrix has odd size {size}")));
        }
        if !full.is_symmetric(SYMMETRY_TOL) {
            return Err(Error::Contract("block matrix is not symmetric".into()));
        }
        Ok(Self { n: size / 2, full })
    }

    pub fn from_blocks(b11: &DenseMatrix, b12: &DenseMatrix, b22: &DenseMatrix) -> Result<Self> {
        let n = b11.ensure_square("B11")?;
        for (name, b) in [("B12", b12), ("B22", b22)] {
            if b.rows() != n || b.cols() != n {
                return Err(Error::Dimension(format!("{name} must be {n}x{n}")));
            }
        }
        let mut full = DenseMatrix::zeros(2 * n, 2 * n);
        full.set_block(0, 0, b11);
        full.set_block(0, n, b12);
        full.set_block(n, 0, &b12.transpose());
        full.set_block(n, n, b22);
        Self::new(full)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn full(&self) -> &DenseMatrix {
        &self.full
    }

    pub fn b11(&self) -> DenseMatrix {
        self.full.block(0, 0, self.n, self.n)
    }

    pub fn b12(&self) -> DenseMatrix {
        self.full.block(0, self.n, self.n, self.n)
    }

    pub fn b22(&self) -> DenseMatrix {
        self.full.block(self.n, self.n, self.n, self.n)
    }

    pub fn lambda_max(&self) -> Result<f64> {
        lambda_max(&self.full)
    }

    pub fn lambda_min(&self) -> Result<f64> {
        lambda_min(&self.full)
    }

    pub fn scale(&self, t: f64) -> Self {
        Self {
            n: self.n,
            full: self.full.scale(t),
        }
    }
}

impl Serialize for BlockSymmetric {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.full.serialize(serializer)
    }
}
