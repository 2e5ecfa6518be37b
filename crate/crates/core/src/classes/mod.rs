//! Structured classes of pairs with closed-form stability conditions.
//!
//! Every class here either reduces by signature matrices `D`, `E` to a
//! Metzler/nonnegative pair, where stability is equivalent to `Â + B̄` being
//! Hurwitz, or is one of two 3×3 families with explicit polynomial
//! inequalities.
//!
//! Condition values are reported as slacks: each must be strictly positive
//! for stability. A slack within [`CLASS_MARGIN`] of zero gives `Marginal`.

mod detect;
mod lag;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::{hat_bar, is_hurwitz, is_metzler, is_nonnegative, DiagonalMatrix, HurwitzStatus};
use crate::riccati::MatrixPair;

pub use lag::{correlation_slack, lag_bound, lag_bound_oracle};
pub(crate) use detect::sign as sign_of;

/// Absolute band around each strict inequality.
pub const CLASS_MARGIN: f64 = 1e-9;

/// Shape of `A` accompanying a superdiagonal `B`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AForm {
    Metzler,
    Tridiagonal,
    LastRow,
}

/// Detected class with its parameters. Indices are 0-based.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "class")]
pub enum ClassTag {
    /// `A` Metzler, `B ≥ 0`.
    MetzlerNonneg,
    /// `A` Metzler, `B = e_k bᵀ`.
    MetzlerRankOneRow { k: usize, b: Vec<f64> },
    /// Tridiagonal `A` with `lᵢuᵢ ≥ 0`, `B = e_k bᵀ`.
    TridiagSignSym {
        k: usize,
        b: Vec<f64>,
        a: Vec<f64>,
        l: Vec<f64>,
        u: Vec<f64>,
    },
    /// `A` diagonal apart from the last row `c`, `B = b e_kᵀ`.
    LastRowForm {
        k: usize,
        b: Vec<f64>,
        a: Vec<f64>,
        c: Vec<f64>,
    },
    /// `B` supported on the superdiagonal, `A` of one of the reducible forms.
    SuperdiagB { a_form: AForm, b: Vec<f64> },
    /// Lower bidiagonal 3×3 `A`, `B` supported on `(1,3), (2,3)`.
    #[serde(rename = "ThreeByThree_3AB1")]
    ThreeByThreeAb1 { a: [f64; 3], b: [f64; 2], c: [f64; 2] },
    /// Diagonal-plus-last-row 3×3 `A`, same `B` support.
    #[serde(rename = "ThreeByThree_3AB2")]
    ThreeByThreeAb2 { a: [f64; 3], b: [f64; 2], c: [f64; 2] },
    Unstructured,
}

impl ClassTag {
    pub fn name(&self) -> &'static str {
        match self {
            Self::MetzlerNonneg => "MetzlerNonneg",
            Self::MetzlerRankOneRow { .. } => "MetzlerRankOneRow",
            Self::TridiagSignSym { .. } => "TridiagSignSym",
            Self::LastRowForm { .. } => "LastRowForm",
            Self::SuperdiagB { .. } => "SuperdiagB",
            Self::ThreeByThreeAb1 { .. } => "ThreeByThree_3AB1",
            Self::ThreeByThreeAb2 { .. } => "ThreeByThree_3AB2",
            Self::Unstructured => "Unstructured",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    NotStable,
    Marginal,
}

impl Stability {
    fn from_hurwitz(status: HurwitzStatus) -> Self {
        match status {
            HurwitzStatus::Hurwitz => Self::Stable,
            HurwitzStatus::NotHurwitz => Self::NotStable,
            HurwitzStatus::Marginal => Self::Marginal,
        }
    }

    fn from_slacks<'a>(slacks: impl IntoIterator<Item = &'a f64>) -> Self {
        let mut out = Self::Stable;
        for &s in slacks {
            if s < -CLASS_MARGIN {
                return Self::NotStable;
            }
            if s <= CLASS_MARGIN {
                out = Self::Marginal;
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassVerdict {
    pub tag: ClassTag,
    pub stable: Stability,
    pub condition_values: BTreeMap<String, f64>,
    /// Signature matrices of the reduction, when the class has one.
    #[serde(rename = "D", skip_serializing_if = "Option::is_none")]
    pub d: Option<DiagonalMatrix>,
    #[serde(rename = "E", skip_serializing_if = "Option::is_none")]
    pub e: Option<DiagonalMatrix>,
}

/// First matching class, in the order the variants are declared.
pub fn classify(pair: &MatrixPair) -> ClassTag {
    detect::detect(pair).tag
}

/// Evaluates the closed-form condition of whatever class the pair falls in.
/// `None` for unstructured pairs.
pub fn class_condition(pair: &MatrixPair) -> Result<Option<ClassVerdict>> {
    match classify(pair) {
        ClassTag::Unstructured => Ok(None),
        ClassTag::MetzlerNonneg => metzler_nonneg_condition(pair).map(Some),
        ClassTag::ThreeByThreeAb1 { .. } => three_by_three_ab1_condition(pair).map(Some),
        ClassTag::ThreeByThreeAb2 { .. } => three_by_three_ab2_condition(pair).map(Some),
        _ => structured_condition(pair).map(Some),
    }
}

/// `A` Metzler and `B ≥ 0`: stable exactly when `A + B` is Hurwitz.
pub fn metzler_nonneg_condition(pair: &MatrixPair) -> Result<ClassVerdict> {
    if !is_metzler(pair.a()) || !is_nonnegative(pair.b()) {
        return Err(Error::Class("A must be Metzler and B nonnegative".into()));
    }
    let report = is_hurwitz(&(pair.a() + pair.b()))?;
    Ok(ClassVerdict {
        tag: ClassTag::MetzlerNonneg,
        stable: Stability::from_hurwitz(report.status),
        condition_values: BTreeMap::from([("-mu(A+B)".to_string(), -report.abscissa)]),
        d: None,
        e: None,
    })
}

/// Signature-reducible classes: builds `D`, `E`, checks `DAD = Â` and
/// `DBE = B̄` exactly, then tests `Â + B̄` for Hurwitz stability.
pub fn structured_condition(pair: &MatrixPair) -> Result<ClassVerdict> {
    let found = detect::detect(pair);
    let reducible = matches!(
        found.tag,
        ClassTag::MetzlerRankOneRow { .. }
            | ClassTag::TridiagSignSym { .. }
            | ClassTag::LastRowForm { .. }
            | ClassTag::SuperdiagB { .. }
    );
    let (d, e) = match (reducible, found.signatures) {
        (true, Some(sig)) => sig,
        _ => {
            return Err(Error::Class(format!(
                "pair is {}, not a signature-reducible class",
                found.tag.name()
            )))
        }
    };
    let d = DiagonalMatrix::new(d);
    let e = DiagonalMatrix::new(e);
    if !d.is_signature() || !e.is_signature() {
        return Err(Error::Numeric("reduction produced a non-signature scaling".into()));
    }
    let (a_hat, _) = hat_bar(pair.a())?;
    let (_, b_bar) = hat_bar(pair.b())?;
    if d.left_mul(&d.right_mul(pair.a())) != a_hat {
        return Err(Error::Numeric("DAD differs from Â".into()));
    }
    if d.left_mul(&e.right_mul(pair.b())) != b_bar {
        return Err(Error::Numeric("DBE differs from B̄".into()));
    }
    let report = is_hurwitz(&(&a_hat + &b_bar))?;
    Ok(ClassVerdict {
        tag: found.tag,
        stable: Stability::from_hurwitz(report.status),
        condition_values: BTreeMap::from([("-mu(Ahat+Bbar)".to_string(), -report.abscissa)]),
        d: Some(d),
        e: Some(e),
    })
}

/// Lower bidiagonal 3×3 family. Slacks:
/// `−max aᵢ`, `a₂a₃ − |b₂c₂|`, `|a₁a₂a₃| − |c₂(b₁c₁ − a₁b₂)|`.
pub fn three_by_three_ab1_condition(pair: &MatrixPair) -> Result<ClassVerdict> {
    let tag = detect::three_by_three_ab1(pair)
        .ok_or_else(|| Error::Class("pair does not have the 3×3 bidiagonal pattern".into()))?;
    let ClassTag::ThreeByThreeAb1 { a, b, c } = tag else {
        unreachable!()
    };
    let mut values = diagonal_slacks(&a);
    values.insert("a2a3-|b2c2|".into(), a[1] * a[2] - (b[1] * c[1]).abs());
    values.insert(
        "|a1a2a3|-|c2(b1c1-a1b2)|".into(),
        (a[0] * a[1] * a[2]).abs() - (c[1] * (b[0] * c[0] - a[0] * b[1])).abs(),
    );
    Ok(slack_verdict(tag, values))
}

/// Diagonal-plus-last-row 3×3 family. Slacks:
/// `−max aᵢ`, `a₁a₃ − |c₁b₁|`, `a₂a₃ − |b₂c₂|`, `|a₁a₂a₃| − |a₁b₂c₂ + b₁c₁a₂|`.
pub fn three_by_three_ab2_condition(pair: &MatrixPair) -> Result<ClassVerdict> {
    let tag = detect::three_by_three_ab2(pair)
        .ok_or_else(|| Error::Class("pair does not have the 3×3 last-row pattern".into()))?;
    let ClassTag::ThreeByThreeAb2 { a, b, c } = tag else {
        unreachable!()
    };
    let mut values = diagonal_slacks(&a);
    values.insert("a1a3-|c1b1|".into(), a[0] * a[2] - (c[0] * b[0]).abs());
    values.insert("a2a3-|b2c2|".into(), a[1] * a[2] - (b[1] * c[1]).abs());
    values.insert(
        "|a1a2a3|-|a1b2c2+b1c1a2|".into(),
        (a[0] * a[1] * a[2]).abs() - (a[0] * b[1] * c[1] + b[0] * c[0] * a[1]).abs(),
    );
    Ok(slack_verdict(tag, values))
}

/// The sign condition on the diagonal as one slack, `−max aᵢ`.
fn diagonal_slacks(a: &[f64; 3]) -> BTreeMap<String, f64> {
    let top = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    BTreeMap::from([("-max(a_i)".to_string(), -top)])
}

fn slack_verdict(tag: ClassTag, values: BTreeMap<String, f64>) -> ClassVerdict {
    ClassVerdict {
        tag,
        stable: Stability::from_slacks(values.values()),
        condition_values: values,
        d: None,
        e: None,
    }
}
