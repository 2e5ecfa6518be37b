//! Seeded random instance generators for the self-test suites.
//!
//! Entries are uniform in `[−3, 3]` with the class constraints imposed.
//! Instances whose deciding quantity lies within [`BOUNDARY`] of zero are
//! discarded, and draws are steered towards an even split of stable and
//! unstable outcomes by rejection.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::classes::{
    three_by_three_ab1_condition, three_by_three_ab2_condition, ClassTag, Stability,
};
use crate::matcore::{hat_bar, is_hurwitz, DenseMatrix, DiagonalMatrix, HurwitzStatus};
use crate::riccati::MatrixPair;
use crate::transforms::ScalingPair;

/// Exclusion band around every decision boundary.
pub const BOUNDARY: f64 = 0.05;
const RANGE: f64 = 3.0;
/// Draw cap per requested instance before balancing is given up.
const MAX_DRAWS: usize = 20_000;

fn entry(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(-RANGE..=RANGE)
}

fn magnitude(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(0.0..=RANGE)
}

fn sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

fn matrix(n: usize, f: impl FnMut(usize, usize) -> f64) -> DenseMatrix {
    DenseMatrix::from_fn(n, n, f)
}

fn pair(a: DenseMatrix, b: DenseMatrix) -> MatrixPair {
    MatrixPair::new(a, b).expect("generated shapes agree")
}

/// Draws until `count` instances are collected, alternating the wanted
/// label. `draw` yields an instance with its label, or `None` to discard.
fn balanced<T>(
    rng: &mut ChaCha8Rng,
    count: usize,
    mut draw: impl FnMut(&mut ChaCha8Rng) -> Option<(T, bool)>,
) -> Vec<(T, bool)> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let want = out.len() % 2 == 0;
        let mut fallback = None;
        for _ in 0..MAX_DRAWS {
            if let Some((x, label)) = draw(rng) {
                if label == want {
                    fallback = Some((x, label));
                    break;
                }
                fallback.get_or_insert((x, label));
            }
        }
        out.push(fallback.expect("generator never produced a retained instance"));
    }
    out
}

/// Hurwitz label of `m`, or `None` inside the boundary band.
fn hurwitz_label(m: &DenseMatrix) -> Option<bool> {
    let r = is_hurwitz(m).ok()?;
    if r.abscissa.abs() < BOUNDARY || r.status == HurwitzStatus::Marginal {
        return None;
    }
    Some(r.status == HurwitzStatus::Hurwitz)
}

fn comparison_label(p: &MatrixPair) -> Option<bool> {
    let (a_hat, _) = hat_bar(p.a()).ok()?;
    let (_, b_bar) = hat_bar(p.b()).ok()?;
    hurwitz_label(&(&a_hat + &b_bar))
}

fn metzler(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
    matrix(n, |i, j| if i == j { entry(rng) } else { magnitude(rng) })
}

/// `A` Metzler, `B ≥ 0`, labelled by `A + B` Hurwitz.
pub fn metzler_nonneg(rng: &mut ChaCha8Rng, count: usize) -> Vec<(MatrixPair, bool)> {
    balanced(rng, count, |rng| {
        let n = rng.random_range(2..=5);
        let a = metzler(rng, n);
        let b = matrix(n, |_, _| magnitude(rng));
        let label = hurwitz_label(&(&a + &b))?;
        Some((pair(a, b), label))
    })
}

/// 3×3 bidiagonal family, labelled by its closed-form condition.
pub fn ab1(rng: &mut ChaCha8Rng, count: usize) -> Vec<(MatrixPair, bool)> {
    balanced(rng, count, |rng| {
        let v: Vec<f64> = (0..7).map(|_| entry(rng)).collect();
        let (a, c, b) = ([v[0], v[1], v[2]], [v[3], v[4]], [v[5], v[6]]);
        let p = pair(
            matrix(3, |i, j| match (i, j) {
                (i, j) if i == j => a[i],
                (1, 0) => c[0],
                (2, 1) => c[1],
                _ => 0.0,
            }),
            three_ab_b(b),
        );
        let verdict = three_by_three_ab1_condition(&p).ok()?;
        slack_label(&verdict.condition_values, verdict.stable).map(|l| (p, l))
    })
}

/// 3×3 last-row family, labelled by its closed-form condition.
pub fn ab2(rng: &mut ChaCha8Rng, count: usize) -> Vec<(MatrixPair, bool)> {
    balanced(rng, count, |rng| {
        let v: Vec<f64> = (0..7).map(|_| entry(rng)).collect();
        let (a, c, b) = ([v[0], v[1], v[2]], [v[3], v[4]], [v[5], v[6]]);
        let p = pair(
            matrix(3, |i, j| match (i, j) {
                (i, j) if i == j => a[i],
                (2, 0) => c[0],
                (2, 1) => c[1],
                _ => 0.0,
            }),
            three_ab_b(b),
        );
        let verdict = three_by_three_ab2_condition(&p).ok()?;
        slack_label(&verdict.condition_values, verdict.stable).map(|l| (p, l))
    })
}

fn three_ab_b(b: [f64; 2]) -> DenseMatrix {
    matrix(3, |i, j| if j == 2 && i < 2 { b[i] } else { 0.0 })
}

/// Every slack at least `BOUNDARY` away from zero.
fn slack_label(
    values: &std::collections::BTreeMap<String, f64>,
    stable: Stability,
) -> Option<bool> {
    if values.values().any(|s| s.abs() < BOUNDARY) {
        return None;
    }
    Some(stable == Stability::Stable)
}

/// The signature-reducible classes exercised by the structured suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReducibleClass {
    MetzlerRankOneRow,
    TridiagSignSym,
    LastRowForm,
    SuperdiagB,
}

impl ReducibleClass {
    pub const ALL: [Self; 4] = [
        Self::MetzlerRankOneRow,
        Self::TridiagSignSym,
        Self::LastRowForm,
        Self::SuperdiagB,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::MetzlerRankOneRow => "MetzlerRankOneRow",
            Self::TridiagSignSym => "TridiagSignSym",
            Self::LastRowForm => "LastRowForm",
            Self::SuperdiagB => "SuperdiagB",
        }
    }

    pub fn matches(self, tag: &ClassTag) -> bool {
        tag.name() == self.name()
    }
}

fn tridiagonal(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = entry(rng);
    }
    for i in 0..n - 1 {
        let s = sign(rng);
        a[(i + 1, i)] = s * magnitude(rng);
        a[(i, i + 1)] = s * magnitude(rng);
    }
    a
}

fn last_row(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = entry(rng);
        if i + 1 < n {
            a[(n - 1, i)] = entry(rng);
        }
    }
    a
}

fn single_row(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
    let k = rng.random_range(0..n);
    let mut b = DenseMatrix::zeros(n, n);
    for j in 0..n {
        b[(k, j)] = entry(rng);
    }
    b
}

/// Random instance of a reducible class, labelled by `Â + B̄` Hurwitz.
pub fn reducible(rng: &mut ChaCha8Rng, class: ReducibleClass, count: usize) -> Vec<(MatrixPair, bool)> {
    balanced(rng, count, |rng| {
        let p = match class {
            ReducibleClass::MetzlerRankOneRow => {
                let n = rng.random_range(2..=5);
                pair(metzler(rng, n), single_row(rng, n))
            }
            ReducibleClass::TridiagSignSym => {
                let n = rng.random_range(2..=5);
                pair(tridiagonal(rng, n), single_row(rng, n))
            }
            ReducibleClass::LastRowForm => {
                let n = rng.random_range(2..=5);
                let a = last_row(rng, n);
                let (k, t) = (rng.random_range(0..n), sign(rng));
                let mut b = DenseMatrix::zeros(n, n);
                for i in 0..n {
                    let d = if i + 1 < n { crate::classes::sign_of(a[(n - 1, i)]) } else { 1.0 };
                    b[(i, k)] = t * d * magnitude(rng);
                }
                pair(a, b)
            }
            ReducibleClass::SuperdiagB => {
                let n = rng.random_range(3..=5);
                let a = match rng.random_range(0..3) {
                    0 => metzler(rng, n),
                    1 => tridiagonal(rng, n),
                    _ => last_row(rng, n),
                };
                let mut b = DenseMatrix::zeros(n, n);
                for i in 0..n - 1 {
                    b[(i, i + 1)] = entry(rng);
                }
                pair(a, b)
            }
        };
        if !class.matches(&crate::classes::classify(&p)) {
            return None;
        }
        comparison_label(&p).map(|l| (p, l))
    })
}

/// General dense pair with a diagonal shift that makes roughly half of the
/// draws diagonally Riccati stable. Returned with the comparison-matrix
/// label, which is only a hint: callers decide stability with the solver.
pub fn shifted_general(rng: &mut ChaCha8Rng) -> MatrixPair {
    let n = rng.random_range(2..=5);
    let mut a = matrix(n, |_, _| entry(rng));
    let b = matrix(n, |_, _| entry(rng));
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum::<f64>()
            + b.row(i).iter().map(|v| v.abs()).sum::<f64>();
        a[(i, i)] = -off * rng.random_range(0.6..=1.4) - 0.2;
    }
    pair(a, b)
}

/// `(D, E)` with random signs, `|dᵢ| ∈ [0.5, 2]` and `0 < |eᵢ| ≤ |dᵢ|`.
pub fn admissible_scaling(rng: &mut ChaCha8Rng, n: usize) -> ScalingPair {
    let d: Vec<f64> = (0..n).map(|_| sign(rng) * rng.random_range(0.5..=2.0)).collect();
    let e: Vec<f64> = d
        .iter()
        .map(|di| sign(rng) * di.abs() * rng.random_range(0.05..=1.0))
        .collect();
    ScalingPair::new(DiagonalMatrix::new(d), DiagonalMatrix::new(e))
}

/// Square matrix with a random diagonal shift, about half of them P-matrices.
pub fn p_candidate(rng: &mut ChaCha8Rng) -> DenseMatrix {
    let n = rng.random_range(1..=5);
    let shift = rng.random_range(0.0..=2.0 * RANGE * n as f64 / 2.0);
    matrix(n, |i, j| entry(rng) + if i == j { shift } else { 0.0 })
}

pub fn positive_diagonal(rng: &mut ChaCha8Rng, n: usize) -> DiagonalMatrix {
    DiagonalMatrix::new((0..n).map(|_| rng.random_range(0.1..=5.0)).collect())
}
