//! Extremal bound for `|Cx + Dyz|` over correlation triples.

use crate::error::{Error, Result};

/// Constraint slack `1 − (x² + y² + z²) + 2xyz`, nonnegative exactly when
/// the 3×3 unit-diagonal matrix with off-diagonals `x, y, z` is PSD.
pub fn correlation_slack(x: f64, y: f64, z: f64) -> f64 {
    1.0 - (x * x + y * y + z * z) + 2.0 * x * y * z
}

/// `max{|C|, |C + D|}`.
pub fn lag_bound(c: f64, d: f64) -> Result<f64> {
    if c == 0.0 || d == 0.0 || !c.is_finite() || !d.is_finite() {
        return Err(Error::Contract(format!(
            "lag bound needs finite nonzero coefficients, got C = {c}, D = {d}"
        )));
    }
    Ok(c.abs().max((c + d).abs()))
}

/// Brute-force maximum of `|Cx + Dyz|` over a uniform grid on `[−1, 1]³`
/// restricted to nonnegative correlation slack. The grid always contains
/// the corners, so `step` is rounded to the nearest `2/m`.
pub fn lag_bound_oracle(c: f64, d: f64, grid_step: f64) -> Result<f64> {
    if !(grid_step > 0.0 && grid_step <= 0.1) {
        return Err(Error::Contract(format!(
            "grid step must lie in (0, 0.1], got {grid_step}"
        )));
    }
    let m = (2.0 / grid_step).round() as usize;
    let grid: Vec<f64> = (0..=m).map(|k| -1.0 + 2.0 * k as f64 / m as f64).collect();
    let mut best = 0.0f64;
    for &x in &grid {
        for &y in &grid {
            for &z in &grid {
                if correlation_slack(x, y, z) >= -1e-12 {
                    best = best.max((c * x + d * y * z).abs());
                }
            }
        }
    }
    Ok(best)
}
