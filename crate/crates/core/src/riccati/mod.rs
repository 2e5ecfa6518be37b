//! Diagonal Riccati stability: certificate checking, numeric search, and
//! refutation through Hadamard-product witnesses.
//!
//! A pair `(A, B)` is diagonally Riccati stable when diagonal `P, Q ≻ 0`
//! satisfy `AᵀP + PA + Q + PBQ⁻¹BᵀP ≺ 0`. By a Schur complement this is the
//! same as negativity of the block matrix
//!
//! ```text
//! [ AᵀP + PA + Q   PB ]
//! [ BᵀP            −Q ]
//! ```
//!
//! which is linear in `(P, Q)`. Infeasibility is certified by a unit-diagonal
//! PSD correlation matrix `S` for which `−(A∘S₁₁ + B∘S₁₂)` is not a P-matrix.

mod refute;
mod search;

pub use refute::{
    random_correlation, refute_by_sampling, refute_with, structured_extremes, RefuteOptions, RefuteOutcome,
};
pub use search::{solve_diagonal, SolverOptions};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{
    hadamard, lambda_max, BlockSymmetric, DenseMatrix, DiagonalMatrix, SYMMETRY_TOL,
};
use crate::pmatrix::{is_p_matrix, PMatrixReport};

/// Default PSD tolerance on the minimum eigenvalue of a witness.
pub const PSD_TOL: f64 = 1e-10;

/// The matrices of `ẋ(t) = A x(t) + B x(t − τ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPair")]
pub struct MatrixPair {
    #[serde(rename = "A")]
    a: DenseMatrix,
    #[serde(rename = "B")]
    b: DenseMatrix,
}

#[derive(Deserialize)]
struct RawPair {
    #[serde(rename = "A")]
    a: DenseMatrix,
    #[serde(rename = "B")]
    b: DenseMatrix,
}

impl TryFrom<RawPair> for MatrixPair {
    type Error = Error;

    fn try_from(raw: RawPair) -> Result<Self> {
        Self::new(raw.a, raw.b)
    }
}

impl MatrixPair {
    pub fn new(a: DenseMatrix, b: DenseMatrix) -> Result<Self> {
        let n = a.ensure_square("A")?;
        if b.rows() != n || b.cols() != n {
            return Err(Error::Dimension(format!(
                "B is {}x{} but A is {n}x{n}",
                b.rows(),
                b.cols()
            )));
        }
        Ok(Self { a, b })
    }

    pub fn from_rows(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Self> {
        Self::new(DenseMatrix::from_rows(a)?, DenseMatrix::from_rows(b)?)
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn b(&self) -> &DenseMatrix {
        &self.b
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    /// `A ∘ S₁₁ + B ∘ S₁₂`, whose negation must be a P-matrix for every
    /// admissible `S` when the pair is stable.
    pub fn hadamard_image(&self, s: &BlockSymmetric) -> Result<DenseMatrix> {
        if s.n() != self.n() {
            return Err(Error::Dimension(format!(
                "S has blocks of size {} for a pair of size {}",
                s.n(),
                self.n()
            )));
        }
        hadamard(&self.a, &s.b11())?.checked_add(&hadamard(&self.b, &s.b12())?)
    }
}

/// Diagonal `P, Q ≻ 0` solving the Riccati inequality, with the achieved
/// margin `−λ_max` of the block form.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RiccatiCertificate {
    #[serde(rename = "P")]
    pub p: DiagonalMatrix,
    #[serde(rename = "Q")]
    pub q: DiagonalMatrix,
    pub margin: f64,
}

impl RiccatiCertificate {
    /// Verifies `(P, Q)` against the pair and records the achieved margin.
    /// Fails unless the margin is strictly positive.
    pub fn certify(pair: &MatrixPair, p: DiagonalMatrix, q: DiagonalMatrix) -> Result<Self> {
        let check = verify_certificate(pair, &p, &q, 0.0)?;
        if !check.accepted {
            return Err(Error::Contract(format!(
                "(P, Q) does not certify the pair: block λ_max = {:e}",
                check.block_lambda_max
            )));
        }
        Ok(Self {
            p,
            q,
            margin: check.margin,
        })
    }
}

/// Evidence of infeasibility: a unit-diagonal PSD block matrix whose Hadamard
/// image fails the P-matrix test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationWitness {
    #[serde(rename = "S")]
    pub s: BlockSymmetric,
    pub p_report: PMatrixReport,
    pub min_eigenvalue: f64,
}

impl CorrelationWitness {
    /// Checks every witness invariant: PSD within `psd_tol`, unit diagonal
    /// blocks, and a failing P-matrix report for `−(A∘S₁₁ + B∘S₁₂)`.
    /// Returns `None` when `S` is not a witness for this pair.
    pub fn validate(pair: &MatrixPair, s: BlockSymmetric, psd_tol: f64) -> Result<Option<Self>> {
        if !has_unit_diagonal(&s) {
            return Ok(None);
        }
        let image = pair.hadamard_image(&s)?;
        let p_report = is_p_matrix(&-&image)?;
        if p_report.is_p {
            return Ok(None);
        }
        let min_eigenvalue = s.lambda_min()?;
        if min_eigenvalue < -psd_tol {
            return Ok(None);
        }
        Ok(Some(Self {
            s,
            p_report,
            min_eigenvalue,
        }))
    }
}

pub(crate) fn has_unit_diagonal(s: &BlockSymmetric) -> bool {
    s.full().diagonal().iter().all(|&d| (d - 1.0).abs() <= SYMMETRY_TOL)
}

/// Outcome of the feasibility search.
#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Feasible(RiccatiCertificate),
    Refuted {
        witness: CorrelationWitness,
        samples_tried: usize,
    },
    Unknown {
        best_margin: f64,
        samples_tried: usize,
    },
}

impl Verdict {
    pub fn status(&self) -> &'static str {
        match self {
            Verdict::Feasible(_) => "Feasible",
            Verdict::Refuted { .. } => "Refuted",
            Verdict::Unknown { .. } => "Unknown",
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, Verdict::Feasible(_))
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self, Verdict::Refuted { .. })
    }

    pub fn certificate(&self) -> Option<&RiccatiCertificate> {
        match self {
            Verdict::Feasible(c) => Some(c),
            _ => None,
        }
    }

    pub fn witness(&self) -> Option<&CorrelationWitness> {
        match self {
            Verdict::Refuted { witness, .. } => Some(witness),
            _ => None,
        }
    }

    pub fn to_report(&self) -> VerdictReport {
        match self {
            Verdict::Feasible(c) => VerdictReport {
                status: self.status(),
                p: Some(c.p.entries().to_vec()),
                q: Some(c.q.entries().to_vec()),
                margin: Some(c.margin),
                witness_s: None,
                failing_subset: None,
                samples_tried: 0,
            },
            Verdict::Refuted {
                witness,
                samples_tried,
            } => VerdictReport {
                status: self.status(),
                p: None,
                q: None,
                margin: None,
                witness_s: Some(witness.s.full().to_rows()),
                failing_subset: Some(witness.p_report.failing_subset.clone()),
                samples_tried: *samples_tried,
            },
            Verdict::Unknown {
                best_margin,
                samples_tried,
            } => VerdictReport {
                status: self.status(),
                p: None,
                q: None,
                margin: Some(*best_margin),
                witness_s: None,
                failing_subset: None,
                samples_tried: *samples_tried,
            },
        }
    }
}

/// Wire form of a [`Verdict`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerdictReport {
    pub status: &'static str,
    #[serde(rename = "P", skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
    #[serde(rename = "Q", skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(rename = "witness_S", skip_serializing_if = "Option::is_none")]
    pub witness_s: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failing_subset: Option<Vec<usize>>,
    pub samples_tried: usize,
}

fn check_diagonals(pair: &MatrixPair, p: &DiagonalMatrix, q: &DiagonalMatrix) -> Result<()> {
    let n = pair.n();
    if p.len() != n || q.len() != n {
        return Err(Error::Dimension(format!(
            "P has {} and Q has {} entries for a pair of size {n}",
            p.len(),
            q.len()
        )));
    }
    Ok(())
}

/// `[[AᵀP + PA + Q, PB], [BᵀP, −Q]]`.
pub fn block_lmi(pair: &MatrixPair, p: &DiagonalMatrix, q: &DiagonalMatrix) -> Result<BlockSymmetric> {
    check_diagonals(pair, p, q)?;
    let pa = p.left_mul(pair.a());
    let mut top_left = &pa.transpose() + &pa;
    for (i, qi) in q.entries().iter().enumerate() {
        top_left[(i, i)] += qi;
    }
    let pb = p.left_mul(pair.b());
    let bottom_right = q.to_dense().scale(-1.0);
    BlockSymmetric::from_blocks(&top_left, &pb, &bottom_right)
}

/// `AᵀP + PA + Q + PBQ⁻¹BᵀP`.
pub fn riccati_expression(
    pair: &MatrixPair,
    p: &DiagonalMatrix,
    q: &DiagonalMatrix,
) -> Result<DenseMatrix> {
    check_diagonals(pair, p, q)?;
    q.ensure_positive("Q")?;
    let pa = p.left_mul(pair.a());
    let pb = p.left_mul(pair.b());
    let coupling = &q.inverse().right_mul(&pb) * &pb.transpose();
    let mut out = &(&pa.transpose() + &pa) + &coupling;
    for (i, qi) in q.entries().iter().enumerate() {
        out[(i, i)] += qi;
    }
    Ok(out.symmetric_part())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CertificateCheck {
    pub accepted: bool,
    /// `−λ_max` of the block form.
    pub margin: f64,
    pub riccati_lambda_max: f64,
    pub block_lambda_max: f64,
    /// Both forms agree in sign, as the Schur complement requires.
    pub schur_consistent: bool,
}

/// Evaluates the Riccati inequality in both its quadratic and block forms.
/// Accepts when both maximal eigenvalues are below `-margin_req` and agree in
/// sign.
pub fn verify_certificate(
    pair: &MatrixPair,
    p: &DiagonalMatrix,
    q: &DiagonalMatrix,
    margin_req: f64,
) -> Result<CertificateCheck> {
    p.ensure_positive("P")?;
    q.ensure_positive("Q")?;
    let riccati_lambda_max = lambda_max(&riccati_expression(pair, p, q)?)?;
    let block_lambda_max = block_lmi(pair, p, q)?.lambda_max()?;
    let schur_consistent = (riccati_lambda_max < 0.0) == (block_lambda_max < 0.0);
    Ok(CertificateCheck {
        accepted: schur_consistent
            && riccati_lambda_max < -margin_req
            && block_lambda_max < -margin_req,
        margin: -block_lambda_max,
        riccati_lambda_max,
        block_lambda_max,
        schur_consistent,
    })
}
