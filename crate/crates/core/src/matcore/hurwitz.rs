//! Hurwitz stability without a nonsymmetric eigensolver.
//!
//! The characteristic polynomial comes from the Faddeev–LeVerrier recursion on
//! a norm-scaled copy of the matrix; stability is read off the first column of
//! the Routh table. The spectral abscissa is located by bisection on shifted
//! polynomials `p(λ + s)`, since `μ(A) < s` exactly when `p(λ + s)` passes the
//! Routh test.
//!
//! The abscissa inherits the conditioning of polynomial roots: an eigenvalue
//! of multiplicity `m` is located to roughly `ε^(1/m)` relative accuracy.

use serde::{Deserialize, Serialize};

use super::dense::DenseMatrix;
use crate::error::Result;

pub const DEFAULT_HURWITZ_MARGIN: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HurwitzStatus {
    Hurwitz,
    NotHurwitz,
    Marginal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HurwitzReport {
    pub status: HurwitzStatus,
    /// Spectral abscissa `μ(A)`, located by Routh bisection.
    pub abscissa: f64,
}

/// Monic characteristic polynomial coefficients `[1, c₁, …, cₙ]` of
/// `det(λI − A) = λⁿ + c₁λⁿ⁻¹ + … + cₙ`.
pub fn characteristic_polynomial(a: &DenseMatrix) -> Result<Vec<f64>> {
    let n = a.ensure_square("characteristic polynomial input")?;
    let mut coeffs = Vec::with_capacity(n + 1);
    coeffs.push(1.0);
    let mut m = DenseMatrix::zeros(n, n);
    for k in 1..=n {
        for i in 0..n {
            m[(i, i)] += coeffs[k - 1];
        }
        let am = a.matmul(&m)?;
        let trace: f64 = am.diagonal().iter().sum();
        coeffs.push(-trace / k as f64);
        m = am;
    }
    Ok(coeffs)
}

/// First column of the Routh table for a polynomial with descending
/// coefficients. Stops after the first zero pivot, which is included.
pub fn routh_pivots(coeffs: &[f64]) -> Vec<f64> {
    let degree = coeffs.len() - 1;
    let mut upper: Vec<f64> = coeffs.iter().step_by(2).copied().collect();
    let mut lower: Vec<f64> = coeffs.iter().skip(1).step_by(2).copied().collect();
    let mut pivots = vec![upper[0]];
    for _ in 0..degree {
        let pivot = lower.first().copied().unwrap_or(0.0);
        pivots.push(pivot);
        if pivot == 0.0 {
            break;
        }
        let width = upper.len().max(lower.len());
        let next: Vec<f64> = (0..width.saturating_sub(1))
            .map(|i| {
                let u = upper.get(i + 1).copied().unwrap_or(0.0);
                let l = lower.get(i + 1).copied().unwrap_or(0.0);
                (pivot * u - upper[0] * l) / pivot
            })
            .collect();
        upper = lower;
        lower = next;
    }
    pivots
}

/// Coefficients of `q(λ) = p(λ + s)` (Taylor shift, descending order).
pub fn shift_polynomial(coeffs: &[f64], s: f64) -> Vec<f64> {
    let mut c = coeffs.to_vec();
    let n = c.len() - 1;
    for i in 0..n {
        for j in 1..=n - i {
            c[j] += s * c[j - 1];
        }
    }
    c
}

fn routh_stable(coeffs: &[f64]) -> bool {
    let pivots = routh_pivots(coeffs);
    pivots.len() == coeffs.len() && pivots.iter().all(|&p| p > 0.0)
}

/// Spectral abscissa of a monic polynomial whose roots lie in the closed
/// disk of radius `radius`.
fn polynomial_abscissa(coeffs: &[f64], radius: f64) -> f64 {
    let mut lo = -1.01 * radius;
    let mut hi = 1.01 * radius;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if routh_stable(&shift_polynomial(coeffs, mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn spectral_abscissa(a: &DenseMatrix) -> Result<f64> {
    a.ensure_square("spectral abscissa input")?;
    let scale = a.inf_norm();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let coeffs = characteristic_polynomial(&a.scale(1.0 / scale))?;
    Ok(scale * polynomial_abscissa(&coeffs, 1.0))
}

pub fn is_hurwitz(a: &DenseMatrix) -> Result<HurwitzReport> {
    is_hurwitz_with_margin(a, DEFAULT_HURWITZ_MARGIN)
}

/// Tri-state Hurwitz decision.
///
/// `Hurwitz` needs every Routh pivot of the norm-scaled polynomial above
/// `margin` and `μ(A) < -margin`. `NotHurwitz` needs `μ(A) > margin`.
/// Everything else is `Marginal`.
pub fn is_hurwitz_with_margin(a: &DenseMatrix, margin: f64) -> Result<HurwitzReport> {
    a.ensure_square("Hurwitz test input")?;
    let scale = a.inf_norm();
    if scale == 0.0 {
        return Ok(HurwitzReport {
            status: HurwitzStatus::Marginal,
            abscissa: 0.0,
        });
    }
    let coeffs = characteristic_polynomial(&a.scale(1.0 / scale))?;
    let abscissa = scale * polynomial_abscissa(&coeffs, 1.0);
    let pivots = routh_pivots(&coeffs);
    let pivots_clear = pivots.len() == coeffs.len() && pivots.iter().all(|&p| p > margin);

    let status = if abscissa > margin {
        HurwitzStatus::NotHurwitz
    } else if abscissa < -margin && pivots_clear {
        HurwitzStatus::Hurwitz
    } else {
        HurwitzStatus::Marginal
    };
    Ok(HurwitzReport { status, abscissa })
}
