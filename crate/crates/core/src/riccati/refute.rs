//! Witness search for infeasibility.
//!
//! Any PSD `S` with unit-diagonal blocks whose image `−(A∘S₁₁ + B∘S₁₂)` is not
//! a P-matrix proves that no diagonal certificate exists. Candidates are tried
//! in a fixed order: the two structured extremes (all blocks `𝟙𝟙ᵀ`, and the
//! same with `S₁₂ = −𝟙𝟙ᵀ`), then the remaining rank-one sign patterns
//! `S = vvᵀ` with `v ∈ {±1}²ⁿ`, then random normalized Gram matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{CorrelationWitness, MatrixPair, PSD_TOL};
use crate::error::Result;
use crate::matcore::{BlockSymmetric, DenseMatrix};
use crate::pmatrix::is_p_matrix;

/// Sign patterns are enumerated exhaustively up to this many, and sampled
/// beyond it.
const MAX_SIGN_PATTERNS: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct RefuteOptions {
    /// Random Gram samples after the deterministic candidates.
    pub samples: usize,
    pub seed: u64,
    pub psd_tol: f64,
    /// Accept witnesses whose failing minor lies inside the zero band.
    pub accept_marginal: bool,
    /// Try rank-one sign patterns beyond the two structured extremes.
    pub sign_patterns: bool,
}

impl Default for RefuteOptions {
    fn default() -> Self {
        Self {
            samples: 256,
            seed: 0,
            psd_tol: PSD_TOL,
            accept_marginal: true,
            sign_patterns: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefuteOutcome {
    pub witness: Option<CorrelationWitness>,
    pub samples_tried: usize,
}

/// The two extremes: every block `𝟙𝟙ᵀ`, and `S₁₂ = −𝟙𝟙ᵀ` with the diagonal
/// blocks kept at `𝟙𝟙ᵀ`.
pub fn structured_extremes(n: usize) -> [BlockSymmetric; 2] {
    let ones = DenseMatrix::ones(n, n);
    let neg = ones.scale(-1.0);
    [
        BlockSymmetric::from_blocks(&ones, &ones, &ones).expect("all-ones is symmetric"),
        BlockSymmetric::from_blocks(&ones, &neg, &ones).expect("sign-flipped is symmetric"),
    ]
}

/// Searches for a witness with default options, `n_samples` random Gram
/// matrices, and the given seed. `None` is not a proof of feasibility.
pub fn refute_by_sampling(
    pair: &MatrixPair,
    n_samples: usize,
    seed: u64,
) -> Result<Option<CorrelationWitness>> {
    let opts = RefuteOptions {
        samples: n_samples.max(1),
        seed,
        ..RefuteOptions::default()
    };
    Ok(refute_with(pair, &opts)?.witness)
}

pub fn refute_with(pair: &MatrixPair, opts: &RefuteOptions) -> Result<RefuteOutcome> {
    let n = pair.n();
    let mut tried = 0;

    for s in structured_extremes(n) {
        tried += 1;
        if let Some(w) = accept(pair, s, opts)? {
            return Ok(found(w, tried));
        }
    }

    if opts.sign_patterns {
        for v in sign_patterns(n, opts.seed) {
            tried += 1;
            if !rank_one_image_fails(pair, &v)? {
                continue;
            }
            let s = BlockSymmetric::new(DenseMatrix::from_fn(2 * n, 2 * n, |i, j| v[i] * v[j]))?;
            if let Some(w) = accept(pair, s, opts)? {
                return Ok(found(w, tried));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.samples {
        tried += 1;
        let s = random_correlation(2 * n, &mut rng)?;
        if let Some(w) = accept(pair, s, opts)? {
            return Ok(found(w, tried));
        }
    }

    Ok(RefuteOutcome {
        witness: None,
        samples_tried: tried,
    })
}

fn found(witness: CorrelationWitness, samples_tried: usize) -> RefuteOutcome {
    RefuteOutcome {
        witness: Some(witness),
        samples_tried,
    }
}

fn accept(
    pair: &MatrixPair,
    s: BlockSymmetric,
    opts: &RefuteOptions,
) -> Result<Option<CorrelationWitness>> {
    Ok(CorrelationWitness::validate(pair, s, opts.psd_tol)?
        .filter(|w| opts.accept_marginal || !w.p_report.marginal))
}

/// Cheap pre-test for `S = vvᵀ`: the image is `D₁AD₁ + D₁BD₂` with
/// `D₁, D₂` the two halves of `v`.
fn rank_one_image_fails(pair: &MatrixPair, v: &[f64]) -> Result<bool> {
    let n = pair.n();
    let (a, b) = (pair.a(), pair.b());
    let neg_image =
        DenseMatrix::from_fn(n, n, |i, j| -(v[i] * v[j] * a[(i, j)] + v[i] * v[n + j] * b[(i, j)]));
    Ok(!is_p_matrix(&neg_image)?.is_p)
}

/// Sign vectors with a leading `+1` (`vvᵀ` is invariant under `v ↦ −v`),
/// skipping the two structured extremes.
fn sign_patterns(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let free = 2 * n - 1;
    let is_extreme = |v: &[f64]| {
        v[..n].iter().all(|&x| x == 1.0)
            && (v[n..].iter().all(|&x| x == 1.0) || v[n..].iter().all(|&x| x == -1.0))
    };
    let build = |bits: u64| -> Vec<f64> {
        std::iter::once(1.0)
            .chain((0..free).map(|k| if bits >> k & 1 == 1 { -1.0 } else { 1.0 }))
            .collect()
    };
    if free < usize::BITS as usize && (1usize << free) <= MAX_SIGN_PATTERNS {
        (0..1u64 << free)
            .map(build)
            .filter(|v| !is_extreme(v))
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5157_4e5f_5041_5454);
        (0..MAX_SIGN_PATTERNS)
            .map(|_| {
                std::iter::once(1.0)
                    .chain((0..free).map(|_| if rng.random::<bool>() { -1.0 } else { 1.0 }))
                    .collect()
            })
            .filter(|v: &Vec<f64>| !is_extreme(v))
            .collect()
    }
}

/// `S = GᵀG` with `G` a `k × k` Gaussian matrix whose columns are normalized,
/// so `S` is PSD with unit diagonal. `k` must be even.
pub fn random_correlation<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<BlockSymmetric> {
    let mut g: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..k).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    for col in &mut g {
        let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        col.iter_mut().for_each(|x| *x /= norm);
    }
    let s = DenseMatrix::from_fn(k, k, |i, j| {
        if i == j {
            1.0
        } else {
            g[i].iter().zip(&g[j]).map(|(x, y)| x * y).sum()
        }
    });
    BlockSymmetric::new(s.symmetric_part())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riccati::has_unit_diagonal;

    fn scalar(a: f64, b: f64) -> MatrixPair {
        MatrixPair::from_rows(&[vec![a]], &[vec![b]]).unwrap()
    }

    #[test]
    fn all_ones_extreme_refutes_unstable_scalar() {
        let out = refute_with(&scalar(-1.0, 2.0), &RefuteOptions::default()).unwrap();
        let w = out.witness.expect("witness");
        assert_eq!(out.samples_tried, 1);
        assert_eq!(w.s.full(), &DenseMatrix::ones(2, 2));
        assert!(w.min_eigenvalue >= -PSD_TOL);
    }

    #[test]
    fn feasible_scalar_has_no_witness() {
        assert!(refute_by_sampling(&scalar(-1.0, 0.5), 200, 3).unwrap().is_none());
    }

    #[test]
    fn diagonal_stable_a_without_delay_has_no_witness() {
        let a = DenseMatrix::from_rows(&[vec![-1.0, 0.0], vec![0.0, -2.0]]).unwrap();
        let pair = MatrixPair::new(a, DenseMatrix::zeros(2, 2)).unwrap();
        assert!(refute_by_sampling(&pair, 1, 0).unwrap().is_none());
    }

    #[test]
    fn random_correlations_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in [2, 4, 8] {
            let s = random_correlation(k, &mut rng).unwrap();
            assert!(has_unit_diagonal(&s));
            assert!(s.lambda_min().unwrap() >= -PSD_TOL);
        }
    }

    #[test]
    fn sign_patterns_exclude_extremes() {
        let pats = sign_patterns(2, 0);
        assert_eq!(pats.len(), 8 - 2);
        assert!(pats.iter().all(|v| v[0] == 1.0));
    }

    #[test]
    fn deterministic_given_seed() {
        let a = DenseMatrix::from_rows(&[vec![-1.0, -2.0], vec![-2.0, -1.0]]).unwrap();
        let pair = MatrixPair::new(a, DenseMatrix::zeros(2, 2)).unwrap();
        let x = refute_with(&pair, &RefuteOptions::default()).unwrap();
        let y = refute_with(&pair, &RefuteOptions::default()).unwrap();
        assert!(x.witness.is_some());
        assert_eq!(x, y);
    }
}
