//! Transformations that preserve diagonal Riccati stability, each with an
//! explicit map carrying certificates along.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{hadamard, BlockSymmetric, DenseMatrix, DiagonalMatrix, SYMMETRY_TOL};
use crate::riccati::{verify_certificate, MatrixPair, RiccatiCertificate, PSD_TOL};

/// Diagonal scalings `(D, E)` applied as `(DAD, DBE)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPair {
    #[serde(rename = "D")]
    pub d: DiagonalMatrix,
    #[serde(rename = "E")]
    pub e: DiagonalMatrix,
}

impl ScalingPair {
    pub fn new(d: DiagonalMatrix, e: DiagonalMatrix) -> Self {
        Self { d, e }
    }

    pub fn is_signature(&self) -> bool {
        self.d.is_signature() && self.e.is_signature()
    }

    /// Checks `0 < eᵢᵢ² ≤ dᵢᵢ²` for every `i`.
    pub fn check_admissible(&self, n: usize) -> Result<()> {
        if self.d.len() != n || self.e.len() != n {
            return Err(Error::Dimension(format!(
                "D has {} and E has {} entries for a pair of size {n}",
                self.d.len(),
                self.e.len()
            )));
        }
        for (i, (&d, &e)) in self.d.entries().iter().zip(self.e.entries()).enumerate() {
            if !(e * e > 0.0 && e * e <= d * d) || !d.is_finite() {
                return Err(Error::Contract(format!(
                    "scaling entry {i} violates 0 < e² ≤ d² (d = {d}, e = {e})"
                )));
            }
        }
        Ok(())
    }
}

/// `(P, Q) ↦ (P, DQD)`, taking certificates of `(A, B)` to certificates of
/// `(DAD, DBE)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateMap {
    #[serde(rename = "D")]
    d: DiagonalMatrix,
}

impl CertificateMap {
    pub fn apply(&self, p: &DiagonalMatrix, q: &DiagonalMatrix) -> (DiagonalMatrix, DiagonalMatrix) {
        (p.clone(), self.d.mul_diag(q).mul_diag(&self.d))
    }

    /// Maps `cert` and re-verifies it against the transformed pair.
    pub fn map_certificate(
        &self,
        transformed: &MatrixPair,
        cert: &RiccatiCertificate,
    ) -> Result<RiccatiCertificate> {
        let (p, q) = self.apply(&cert.p, &cert.q);
        RiccatiCertificate::certify(transformed, p, q)
    }
}

/// `(DAD, DBE)` for admissible `(D, E)`, together with the certificate map.
pub fn dad_transform(pair: &MatrixPair, scaling: &ScalingPair) -> Result<(MatrixPair, CertificateMap)> {
    scaling.check_admissible(pair.n())?;
    let (d, e) = (&scaling.d, &scaling.e);
    let a = d.left_mul(&d.right_mul(pair.a()));
    let b = d.left_mul(&e.right_mul(pair.b()));
    Ok((MatrixPair::new(a, b)?, CertificateMap { d: d.clone() }))
}

/// `(A∘S₁₁, B∘S₁₂)` for PSD `S` with `diag(S₁₁) = diag(S₂₂) ≫ 0`.
pub fn hadamard_congruence(pair: &MatrixPair, s: &BlockSymmetric) -> Result<MatrixPair> {
    if s.n() != pair.n() {
        return Err(Error::Dimension(format!(
            "S has blocks of size {} for a pair of size {}",
            s.n(),
            pair.n()
        )));
    }
    check_correlation_shape(s)?;
    MatrixPair::new(hadamard(pair.a(), &s.b11())?, hadamard(pair.b(), &s.b12())?)
}

/// Carries a certificate of `(A, B)` to `(A∘S₁₁, B∘S₁₂)`: the block form
/// of the image under `(P, Q·diag(S₁₁))` is the Hadamard product of the
/// original block form with `S`.
pub fn hadamard_certificate(
    pair: &MatrixPair,
    s: &BlockSymmetric,
    cert: &RiccatiCertificate,
) -> Result<(MatrixPair, RiccatiCertificate)> {
    let image = hadamard_congruence(pair, s)?;
    let diag = DiagonalMatrix::new(s.b11().diagonal());
    let mapped = RiccatiCertificate::certify(&image, cert.p.clone(), cert.q.mul_diag(&diag))?;
    Ok((image, mapped))
}

/// `TST` with `T = diag(S)^(−1/2)`, so both diagonal blocks become unit
/// diagonal.
pub fn normalize_correlation(s: &BlockSymmetric) -> Result<BlockSymmetric> {
    check_correlation_shape(s)?;
    let t: Vec<f64> = s.full().diagonal().iter().map(|d| 1.0 / d.sqrt()).collect();
    let k = 2 * s.n();
    let full = DenseMatrix::from_fn(k, k, |i, j| {
        if i == j {
            1.0
        } else {
            t[i] * s.full()[(i, j)] * t[j]
        }
    });
    BlockSymmetric::new(full)
}

fn check_correlation_shape(s: &BlockSymmetric) -> Result<()> {
    let n = s.n();
    let diag = s.full().diagonal();
    if let Some(i) = diag.iter().position(|&v| v.is_nan() || v <= 0.0) {
        return Err(Error::Contract(format!("diagonal entry {i} of S is {}", diag[i])));
    }
    for i in 0..n {
        let (x, y) = (diag[i], diag[n + i]);
        if (x - y).abs() > SYMMETRY_TOL * x.max(y) {
            return Err(Error::Contract(format!(
                "diag(S11) and diag(S22) differ at {i}: {x} vs {y}"
            )));
        }
    }
    let min = s.lambda_min()?;
    if min < -PSD_TOL {
        return Err(Error::Contract(format!("S is not PSD: λ_min = {min:e}")));
    }
    Ok(())
}

/// `(DA, DB)` for `D ≻ 0` with the certificate `(PD⁻¹, Q)`, which yields the
/// same block matrix as `(P, Q)` does for `(A, B)`.
pub fn dscale_with_certificate(
    pair: &MatrixPair,
    d: &DiagonalMatrix,
    cert: &RiccatiCertificate,
) -> Result<(MatrixPair, RiccatiCertificate)> {
    d.ensure_positive("D")?;
    if d.len() != pair.n() {
        return Err(Error::Dimension(format!(
            "D has {} entries for a pair of size {}",
            d.len(),
            pair.n()
        )));
    }
    if !verify_certificate(pair, &cert.p, &cert.q, 0.0)?.accepted {
        return Err(Error::Contract("input certificate does not verify".into()));
    }
    let scaled = MatrixPair::new(d.left_mul(pair.a()), d.left_mul(pair.b()))?;
    let mapped = RiccatiCertificate::certify(&scaled, cert.p.mul_diag(&d.inverse()), cert.q.clone())?;
    Ok((scaled, mapped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riccati::{random_correlation, solve_diagonal, SolverOptions};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar(a: f64, b: f64) -> MatrixPair {
        MatrixPair::from_rows(&[vec![a]], &[vec![b]]).unwrap()
    }

    fn diag(v: &[f64]) -> DiagonalMatrix {
        DiagonalMatrix::new(v.to_vec())
    }

    fn two_by_two() -> MatrixPair {
        MatrixPair::from_rows(
            &[vec![-3.0, 1.0], vec![-0.5, -2.0]],
            &[vec![0.5, -0.2], vec![0.3, 0.4]],
        )
        .unwrap()
    }

    #[test]
    fn identity_scaling() {
        let pair = two_by_two();
        let id = ScalingPair::new(diag(&[1.0, 1.0]), diag(&[1.0, 1.0]));
        let (out, map) = dad_transform(&pair, &id).unwrap();
        assert_eq!(out, pair);
        let (p, q) = map.apply(&diag(&[2.0, 3.0]), &diag(&[4.0, 5.0]));
        assert_eq!((p, q), (diag(&[2.0, 3.0]), diag(&[4.0, 5.0])));
    }

    #[test]
    fn scalar_dad_certificate() {
        let scaling = ScalingPair::new(diag(&[2.0]), diag(&[1.0]));
        let (out, map) = dad_transform(&scalar(-2.0, 1.0), &scaling).unwrap();
        assert_eq!(out, scalar(-8.0, 2.0));
        let cert = RiccatiCertificate::certify(&scalar(-2.0, 1.0), diag(&[1.0]), diag(&[1.0])).unwrap();
        let mapped = map.map_certificate(&out, &cert).unwrap();
        assert_eq!(mapped.q, diag(&[4.0]));
        let check = verify_certificate(&out, &mapped.p, &mapped.q, 0.0).unwrap();
        assert_abs_diff_eq!(check.riccati_lambda_max, -11.0, epsilon = 1e-12);
    }

    #[test]
    fn inadmissible_scaling() {
        let bad = ScalingPair::new(diag(&[1.0]), diag(&[2.0]));
        assert!(matches!(dad_transform(&scalar(-2.0, 1.0), &bad), Err(Error::Contract(_))));
        let zero = ScalingPair::new(diag(&[1.0]), diag(&[0.0]));
        assert!(dad_transform(&scalar(-2.0, 1.0), &zero).is_err());
    }

    #[test]
    fn signature_scaling_is_an_involution() {
        let pair = two_by_two();
        let sig = ScalingPair::new(diag(&[1.0, -1.0]), diag(&[1.0, -1.0]));
        assert!(sig.is_signature());
        let (once, _) = dad_transform(&pair, &sig).unwrap();
        let (twice, _) = dad_transform(&once, &sig).unwrap();
        assert_eq!(twice, pair);
        let opts = SolverOptions::default();
        assert_eq!(
            solve_diagonal(&pair, &opts).unwrap().status(),
            solve_diagonal(&once, &opts).unwrap().status()
        );
    }

    #[test]
    fn hadamard_congruence_extremes() {
        let pair = two_by_two();
        let ones = DenseMatrix::ones(2, 2);
        let s = BlockSymmetric::from_blocks(&ones, &ones, &ones).unwrap();
        assert_eq!(hadamard_congruence(&pair, &s).unwrap(), pair);

        let id = DenseMatrix::identity(2);
        let s = BlockSymmetric::from_blocks(&id, &DenseMatrix::zeros(2, 2), &id).unwrap();
        let out = hadamard_congruence(&pair, &s).unwrap();
        assert_eq!(out.a(), &diag(&[-3.0, -2.0]).to_dense());
        assert_eq!(out.b(), &DenseMatrix::zeros(2, 2));
    }

    #[test]
    fn hadamard_congruence_keeps_feasibility() {
        let pair = two_by_two();
        let opts = SolverOptions::default();
        assert!(solve_diagonal(&pair, &opts).unwrap().is_feasible());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let s = random_correlation(4, &mut rng).unwrap();
            let out = hadamard_congruence(&pair, &s).unwrap();
            assert!(solve_diagonal(&out, &opts).unwrap().is_feasible());
        }
    }

    #[test]
    fn hadamard_congruence_rejects_bad_s() {
        let pair = two_by_two();
        let mut full = DenseMatrix::identity(4);
        full[(0, 2)] = 2.0;
        full[(2, 0)] = 2.0;
        let s = BlockSymmetric::new(full).unwrap();
        assert!(matches!(hadamard_congruence(&pair, &s), Err(Error::Contract(_))));
        let s = BlockSymmetric::new(diag(&[1.0, 1.0, 2.0, 1.0]).to_dense()).unwrap();
        assert!(matches!(hadamard_congruence(&pair, &s), Err(Error::Contract(_))));
    }

    #[test]
    fn normalize_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s0 = random_correlation(4, &mut rng).unwrap();
        let same = normalize_correlation(&s0).unwrap();
        for (x, y) in same.full().as_slice().iter().zip(s0.full().as_slice()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-15);
        }
        let back = normalize_correlation(&s0.scale(4.0)).unwrap();
        for (x, y) in back.full().as_slice().iter().zip(s0.full().as_slice()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-14);
        }

        // diag(S11) = diag(S22) = (4, 1)
        let t = diag(&[2.0, 1.0, 2.0, 1.0]).to_dense();
        let s = BlockSymmetric::new(&(&t * s0.full()) * &t).unwrap();
        let out = normalize_correlation(&s).unwrap();
        assert!(out.full().diagonal().iter().all(|&d| d == 1.0));
        assert!(out.lambda_min().unwrap() >= -1e-10);
    }

    #[test]
    fn dscale_examples() {
        let pair = scalar(-2.0, 1.0);
        let cert = RiccatiCertificate::certify(&pair, diag(&[1.0]), diag(&[1.0])).unwrap();
        let (same, c) = dscale_with_certificate(&pair, &diag(&[1.0]), &cert).unwrap();
        assert_eq!(same, pair);
        assert_eq!(c.p, cert.p);

        let (scaled, c) = dscale_with_certificate(&pair, &diag(&[3.0]), &cert).unwrap();
        assert_eq!(scaled, scalar(-6.0, 3.0));
        assert_abs_diff_eq!(c.p.entries()[0], 1.0 / 3.0, epsilon = 1e-15);
        let check = verify_certificate(&scaled, &c.p, &c.q, 0.0).unwrap();
        assert_abs_diff_eq!(check.riccati_lambda_max, -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.margin, cert.margin, epsilon = 1e-12);
    }

    #[test]
    fn dscale_rejects_invalid_certificate() {
        let pair = scalar(-1.0, 2.0);
        let fake = RiccatiCertificate {
            p: diag(&[1.0]),
            q: diag(&[1.0]),
            margin: 1.0,
        };
        assert!(matches!(
            dscale_with_certificate(&pair, &diag(&[2.0]), &fake),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn hadamard_certificate_with_unnormalized_s() {
        let pair = two_by_two();
        let cert = solve_diagonal(&pair, &SolverOptions::default())
            .unwrap()
            .certificate()
            .cloned()
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let unit = random_correlation(4, &mut rng).unwrap();
        // Scale rows and columns by (2, 3, 2, 3): equal block diagonals, not unit.
        let t = [2.0f64.sqrt(), 3.0f64.sqrt(), 2.0f64.sqrt(), 3.0f64.sqrt()];
        let full = DenseMatrix::from_fn(4, 4, |i, j| t[i] * unit.full()[(i, j)] * t[j]);
        let s = BlockSymmetric::new(full).unwrap();
        let (image, mapped) = hadamard_certificate(&pair, &s, &cert).unwrap();
        assert_eq!(image, hadamard_congruence(&pair, &s).unwrap());
        assert!(mapped.margin > 0.0);
        assert_abs_diff_eq!(mapped.q.entries()[1], 3.0 * cert.q.entries()[1], epsilon = 1e-12);
    }
}
