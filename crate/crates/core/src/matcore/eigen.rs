//! Cyclic Jacobi eigensolver for real symmetric matrices.

use num_complex::Complex64;
use serde::Serialize;

use super::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Relative symmetry tolerance accepted by the eigensolver.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Off-diagonal Frobenius norm target relative to `‖M‖_F`.
pub const JACOBI_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 50;

/// Eigenvalues of a matrix together with its spectral abscissa.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    pub abscissa: f64,
}

impl Spectrum {
    pub fn from_real(values: &[f64]) -> Self {
        Self {
            abscissa: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            eigenvalues: values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| z.re).collect()
    }
}

/// Full symmetric eigendecomposition: `values` ascending, `vectors[k]` is the
/// unit eigenvector of `values[k]`.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl SymEigen {
    pub fn max(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn top_vector(&self) -> &[f64] {
        self.vectors.last().expect("non-empty spectrum")
    }
}

pub fn sym_spectrum(m: &DenseMatrix) -> Result<Spectrum> {
    Ok(Spectrum::from_real(&sym_eigen(m)?.values))
}

pub fn sym_eigen(m: &DenseMatrix) -> Result<SymEigen> {
    let n = m.ensure_square("symmetric eigensolver input")?;
    if !m.is_symmetric(SYMMETRY_TOL) {
        return Err(Error::Contract("eigensolver input is not symmetric".into()));
    }
    jacobi(m.as_slice(), n)
}

/// Largest eigenvalue; convenience for definiteness tests.
pub fn lambda_max(m: &DenseMatrix) -> Result<f64> {
    Ok(sym_eigen(m)?.max())
}

pub fn lambda_min(m: &DenseMatrix) -> Result<f64> {
    Ok(sym_eigen(m)?.min())
}

/// `M ≺ 0` with a caller-supplied margin: every eigenvalue below `-tol`.
pub fn is_negative_definite(m: &DenseMatrix, tol: f64) -> Result<bool> {
    Ok(lambda_max(m)? < -tol)
}

/// `M ⪰ 0` up to tolerance: smallest eigenvalue at least `-tol`.
pub fn is_psd(m: &DenseMatrix, tol: f64) -> Result<bool> {
    Ok(lambda_min(m)? >= -tol)
}

/// Jacobi on a row-major `n × n` buffer; skips the shape and symmetry checks.
pub(crate) fn jacobi(data: &[f64], n: usize) -> Result<SymEigen> {
    let mut a = data.to_vec();
    // Symmetrize so rounding in the input cannot bias the rotations.
    for i in 0..n {
        for j in 0..i {
            let s = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = s;
            a[j * n + i] = s;
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = JACOBI_TOL * norm;

    let mut converged = false;
    for _ in 0..=JACOBI_MAX_SWEEPS {
        let off = off_diagonal_norm(&a, n);
        if off <= target || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                a[p * n + p] -= t * apq;
                a[q * n + q] += t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for r in 0..n {
                    if r != p && r != q {
                        let arp = a[r * n + p];
                        let arq = a[r * n + q];
                        let new_rp = c * arp - s * arq;
                        let new_rq = s * arp + c * arq;
                        a[r * n + p] = new_rp;
                        a[p * n + r] = new_rp;
                        a[r * n + q] = new_rq;
                        a[q * n + r] = new_rq;
                    }
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = c * vrp - s * vrq;
                    v[r * n + q] = s * vrp + c * vrq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::Numeric(format!(
            "Jacobi iteration did not converge in {JACOBI_MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    Ok(SymEigen {
        values: order.iter().map(|&k| a[k * n + k]).collect(),
        vectors: order
            .iter()
            .map(|&k| (0..n).map(|r| v[r * n + k]).collect())
            .collect(),
    })
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}
