//! Numeric search for diagonal certificates.
//!
//! The block form is linear in `w = (p, q)` and homogeneous, so the search
//! minimizes `λ_max(M(w))` over the scaled simplex `Σw = 2n`, with
//! `w = exp(z)` renormalized to keep every entry positive. Each start runs a
//! Nelder–Mead descent in `z` followed by a polish step: exponentiated
//! gradient on a log-sum-exp smoothing of `λ_max`, whose gradient is the
//! eigenvector-weighted `uᵀ(∂M/∂wᵢ)u`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::refute::{refute_with, RefuteOptions};
use super::{verify_certificate, MatrixPair, RiccatiCertificate, Verdict, PSD_TOL};
use crate::error::Result;
use crate::matcore::{jacobi, DiagonalMatrix, SymEigen};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Required margin: a certificate needs `λ_max ≤ −tol`.
    pub tol: f64,
    pub starts: usize,
    pub seed: u64,
    /// Nelder–Mead iteration cap per start.
    pub max_iter: usize,
    /// Nelder–Mead stops once the simplex spread in `z` drops below this.
    pub simplex_tol: f64,
    /// Exponentiated-gradient iterations per smoothing level.
    pub polish_iter: usize,
    /// Random Gram samples tried when the search fails.
    pub samples: usize,
    pub psd_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            starts: 8,
            seed: 0,
            max_iter: 5000,
            simplex_tol: 1e-12,
            polish_iter: 60,
            samples: 256,
            psd_tol: PSD_TOL,
        }
    }
}

/// Decides diagonal Riccati stability.
///
/// Cheap deterministic witnesses (structured extremes and sign patterns) are
/// tried first, accepting only witnesses clearly outside the zero band. Then
/// the multi-start search runs; the first start, in index order, whose point
/// re-verifies with margin `tol` wins. Failing that, the full witness search
/// runs, and `Unknown` is returned if it also comes up empty.
pub fn solve_diagonal(pair: &MatrixPair, opts: &SolverOptions) -> Result<Verdict> {
    let quick = RefuteOptions {
        samples: 0,
        seed: opts.seed,
        psd_tol: opts.psd_tol,
        accept_marginal: false,
        sign_patterns: true,
    };
    let pre = refute_with(pair, &quick)?;
    if let Some(witness) = pre.witness {
        return Ok(Verdict::Refuted {
            witness,
            samples_tried: pre.samples_tried,
        });
    }

    let model = LmiModel::new(pair);
    let dim = 2 * model.n;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best_lambda = f64::INFINITY;
    for start in 0..opts.starts.max(1) {
        let z0: Vec<f64> = if start == 0 {
            vec![0.0; dim]
        } else {
            (0..dim).map(|_| rng.random_range(-2.0..=2.0)).collect()
        };
        let (w, lambda) = model.minimize(&z0, opts)?;
        best_lambda = best_lambda.min(lambda);
        if lambda > -opts.tol {
            continue;
        }
        if !w.iter().all(|x| x.is_finite() && *x > 0.0) {
            continue;
        }
        let (p, q) = model.split(&w);
        let check = verify_certificate(pair, &p, &q, opts.tol)?;
        if check.accepted {
            return Ok(Verdict::Feasible(RiccatiCertificate {
                p,
                q,
                margin: check.margin,
            }));
        }
    }

    let full = RefuteOptions {
        samples: opts.samples,
        seed: opts.seed,
        psd_tol: opts.psd_tol,
        accept_marginal: true,
        sign_patterns: true,
    };
    let post = refute_with(pair, &full)?;
    let samples_tried = pre.samples_tried + post.samples_tried;
    Ok(match post.witness {
        Some(witness) => Verdict::Refuted {
            witness,
            samples_tried,
        },
        None => Verdict::Unknown {
            best_margin: -best_lambda,
            samples_tried,
        },
    })
}

/// Largest multiplicative change of a weight in one polish step, as a log.
const MAX_LOG_STEP: f64 = 30.0;

/// Flat-buffer evaluation of the block form for the search loop.
struct LmiModel {
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    scale: f64,
}

impl LmiModel {
    fn new(pair: &MatrixPair) -> Self {
        let a = pair.a().as_slice().to_vec();
        let b = pair.b().as_slice().to_vec();
        let scale = pair.a().frobenius_norm() + pair.b().frobenius_norm() + 1.0;
        Self {
            n: pair.n(),
            a,
            b,
            scale,
        }
    }

    fn split(&self, w: &[f64]) -> (DiagonalMatrix, DiagonalMatrix) {
        (
            DiagonalMatrix::new(w[..self.n].to_vec()),
            DiagonalMatrix::new(w[self.n..].to_vec()),
        )
    }

    fn eigen(&self, w: &[f64]) -> Result<SymEigen> {
        jacobi(&self.assemble(w, false), 2 * self.n)
    }

    /// `W^{-1/2} M(w) W^{-1/2}` with `W = diag(w)`. Congruent to `M(w)`, so
    /// the sign of its top eigenvalue is the same, but its diagonal blows up
    /// as any weight goes to zero instead of collapsing onto the zero face.
    fn scaled_lambda_max(&self, w: &[f64]) -> f64 {
        jacobi(&self.assemble(w, true), 2 * self.n).map_or(f64::INFINITY, |e| e.max())
    }

    fn assemble(&self, w: &[f64], congruence: bool) -> Vec<f64> {
        let n = self.n;
        let m = 2 * n;
        let (p, q) = w.split_at(n);
        let mut buf = vec![0.0; m * m];
        for i in 0..n {
            for j in 0..n {
                buf[i * m + j] = p[i] * self.a[i * n + j] + self.a[j * n + i] * p[j];
                let pb = p[i] * self.b[i * n + j];
                buf[i * m + n + j] = pb;
                buf[(n + j) * m + i] = pb;
            }
            buf[i * m + i] += q[i];
            buf[(n + i) * m + n + i] = -q[i];
        }
        if congruence {
            let r: Vec<f64> = w.iter().map(|x| x.sqrt().recip()).collect();
            for i in 0..m {
                for j in 0..m {
                    buf[i * m + j] *= r[i] * r[j];
                }
            }
        }
        buf
    }

    /// Gradient of `uᵀM(w)u` with respect to `w`.
    fn quadratic_gradient(&self, u: &[f64], out: &mut [f64], weight: f64) {
        let n = self.n;
        let (u1, u2) = u.split_at(n);
        for i in 0..n {
            let mut au = 0.0;
            let mut bu = 0.0;
            for j in 0..n {
                au += self.a[i * n + j] * u1[j];
                bu += self.b[i * n + j] * u2[j];
            }
            out[i] += weight * 2.0 * u1[i] * (au + bu);
            out[n + i] += weight * (u1[i] * u1[i] - u2[i] * u2[i]);
        }
    }

    fn weights(&self, z: &[f64]) -> Vec<f64> {
        let zmax = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut w: Vec<f64> = z.iter().map(|v| (v - zmax).exp()).collect();
        normalize(&mut w);
        w
    }

    fn lambda_max_at(&self, w: &[f64]) -> f64 {
        self.eigen(w).map_or(f64::INFINITY, |e| e.max())
    }

    fn minimize(&self, z0: &[f64], opts: &SolverOptions) -> Result<(Vec<f64>, f64)> {
        let objective = |z: &[f64]| self.scaled_lambda_max(&self.weights(z));
        let (z, _) = nelder_mead(objective, z0, 0.5, opts.max_iter, opts.simplex_tol);
        self.polish(self.weights(&z), opts.polish_iter)
    }

    /// Smoothed value `μ log Σ exp(λₖ/μ)`, the true `λ_max`, and the gradient
    /// of the smoothed value with respect to `w`.
    fn smoothed(&self, w: &[f64], mu: f64) -> Result<(f64, f64, Vec<f64>)> {
        let eig = self.eigen(w)?;
        let top = eig.max();
        let mut weights: Vec<f64> = eig.values.iter().map(|l| ((l - top) / mu).exp()).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|x| *x /= total);
        let mut grad = vec![0.0; w.len()];
        for (u, &pi) in eig.vectors.iter().zip(&weights) {
            if pi > 1e-14 {
                self.quadratic_gradient(u, &mut grad, pi);
            }
        }
        Ok((top + mu * total.ln(), top, grad))
    }

    fn polish(&self, w0: Vec<f64>, iters: usize) -> Result<(Vec<f64>, f64)> {
        let mut w = w0;
        let mut best_lambda = self.lambda_max_at(&w);
        let mut best = w.clone();
        let mut mu = 0.05 * self.scale;
        let mut eta = 1.0 / self.scale;
        for _level in 0..8 {
            for _ in 0..iters {
                let Ok((f, _, g)) = self.smoothed(&w, mu) else {
                    break;
                };
                let mut accepted = false;
                for _ in 0..30 {
                    let mut trial: Vec<f64> = w
                        .iter()
                        .zip(&g)
                        .map(|(wi, gi)| wi * (-eta * gi).clamp(-MAX_LOG_STEP, MAX_LOG_STEP).exp())
                        .collect();
                    normalize(&mut trial);
                    if !trial.iter().all(|x| x.is_finite() && *x > 0.0) {
                        eta *= 0.5;
                        continue;
                    }
                    let Ok((f_trial, lambda_trial, _)) = self.smoothed(&trial, mu) else {
                        eta *= 0.5;
                        continue;
                    };
                    if f_trial < f {
                        if lambda_trial < best_lambda {
                            best_lambda = lambda_trial;
                            best.clone_from(&trial);
                        }
                        w = trial;
                        eta *= 1.5;
                        accepted = true;
                        break;
                    }
                    eta *= 0.5;
                }
                if !accepted {
                    break;
                }
            }
            mu *= 0.2;
        }
        Ok((best, best_lambda))
    }
}

/// Rescales to `Σw = len(w)`, i.e. `Σp + Σq = 2n`.
fn normalize(w: &mut [f64]) {
    let total: f64 = w.iter().sum();
    let target = w.len() as f64;
    w.iter_mut().for_each(|x| *x *= target / total);
}

/// Nelder–Mead with standard coefficients. Stops when the largest vertex
/// distance from the best vertex falls below `xtol` or after `max_iter`
/// iterations. Returns the best point and value.
fn nelder_mead(
    f: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    max_iter: usize,
    xtol: f64,
) -> (Vec<f64>, f64) {
    let dim = x0.len();
    let mut simplex: Vec<Vec<f64>> = std::iter::once(x0.to_vec())
        .chain((0..dim).map(|i| {
            let mut v = x0.to_vec();
            v[i] += step;
            v
        }))
        .collect();
    let mut values: Vec<f64> = simplex.iter().map(|x| f(x)).collect();

    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = simplex[1..]
            .iter()
            .map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread < xtol {
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|k| simplex[..dim].iter().map(|v| v[k]).sum::<f64>() / dim as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[dim])
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };

        let reflected = along(-1.0);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = along(-2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[dim] = expanded;
                values[dim] = fe;
            } else {
                simplex[dim] = reflected;
                values[dim] = fr;
            }
        } else if fr < values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = fr;
        } else {
            let contracted = if fr < values[dim] { along(-0.5) } else { along(0.5) };
            let fc = f(&contracted);
            if fc < values[dim].min(fr) {
                simplex[dim] = contracted;
                values[dim] = fc;
            } else {
                for i in 1..=dim {
                    let shrunk: Vec<f64> = simplex[i]
                        .iter()
                        .zip(&simplex[0])
                        .map(|(x, b)| b + 0.5 * (x - b))
                        .collect();
                    values[i] = f(&shrunk);
                    simplex[i] = shrunk;
                }
            }
        }
    }

    let best = (0..=dim)
        .min_by(|&i, &j| values[i].total_cmp(&values[j]))
        .expect("non-empty simplex");
    (simplex[best].clone(), values[best])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::DenseMatrix;

    fn scalar(a: f64, b: f64) -> MatrixPair {
        MatrixPair::from_rows(&[vec![a]], &[vec![b]]).unwrap()
    }

    #[test]
    fn nelder_mead_quadratic() {
        let (x, fx) = nelder_mead(
            |x| (x[0] - 1.0).powi(2) + 2.0 * (x[1] + 0.5).powi(2),
            &[0.0, 0.0],
            0.5,
            2000,
            1e-10,
        );
        assert!((x[0] - 1.0).abs() < 1e-6 && (x[1] + 0.5).abs() < 1e-6);
        assert!(fx < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let pair = MatrixPair::from_rows(
            &[vec![-2.0, 0.7], vec![-0.3, -1.5]],
            &[vec![0.4, -0.2], vec![0.9, 0.1]],
        )
        .unwrap();
        let model = LmiModel::new(&pair);
        let w = vec![0.8, 1.3, 0.6, 1.3];
        let (_, _, g) = model.smoothed(&w, 1e-9).unwrap();
        let h = 1e-6;
        for k in 0..4 {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[k] += h;
            wm[k] -= h;
            let fd = (model.lambda_max_at(&wp) - model.lambda_max_at(&wm)) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-5, "component {k}: fd {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn scalar_feasible() {
        let v = solve_diagonal(&scalar(-2.0, 1.0), &SolverOptions::default()).unwrap();
        let c = v.certificate().expect("feasible");
        let check = verify_certificate(&scalar(-2.0, 1.0), &c.p, &c.q, 1e-7).unwrap();
        assert!(check.accepted);
        assert!((check.margin - c.margin).abs() <= 1e-9);
    }

    #[test]
    fn scalar_refuted() {
        let v = solve_diagonal(&scalar(-1.0, 2.0), &SolverOptions::default()).unwrap();
        let w = v.witness().expect("refuted");
        assert_eq!(w.s.full(), &DenseMatrix::ones(2, 2));
    }

    #[test]
    fn metzler_pair_with_hurwitz_sum() {
        let pair = MatrixPair::from_rows(
            &[vec![-3.0, 1.0], vec![1.0, -3.0]],
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
        )
        .unwrap();
        assert!(solve_diagonal(&pair, &SolverOptions::default()).unwrap().is_feasible());
    }
}
