//! Fixed-step integration of `ẋ(t) = A x(t) + B x(t − τ)` with a constant
//! initial function, plus the quadratic Lyapunov–Krasovskii functional
//! `V(t) = x(t)ᵀP x(t) + ∫_{t−τ}^{t} x(s)ᵀQ x(s) ds`.
//!
//! Integration is classical RK4. The step is shrunk so that `τ/h` is an
//! integer, which puts `t − τ` and `t + h − τ` on the grid; the midpoint
//! value `x(t + h/2 − τ)` comes from cubic Hermite interpolation using the
//! stored derivatives, keeping the scheme fourth order.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::{DenseMatrix, DiagonalMatrix};
use crate::riccati::{verify_certificate, MatrixPair, RiccatiCertificate};

/// Norm beyond which a run is declared divergent.
const BLOW_UP: f64 = 1e100;
/// Allowed per-step increase of `V`, relative to `V(0)`.
pub const LK_STEP_TOL: f64 = 1e-6;
/// Required final norm, relative to `‖φ‖`.
pub const DECAY_THRESHOLD: f64 = 1e-3;
pub const DEFAULT_STEP: f64 = 0.01;

/// Horizon used when none is given: long enough for the slow tails that
/// large delays produce.
pub fn default_horizon(tau: f64) -> f64 {
    50.0 + 40.0 * tau
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DelayTrajectory {
    /// Effective step after snapping `τ/h` to an integer.
    pub h: f64,
    pub tau: f64,
    /// Grid points per delay interval, `τ/h`.
    pub delay_steps: usize,
    /// Sample times, starting at `−τ` and spaced by `h`.
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// `V(t)` for `t ≥ 0`, aligned with `times[delay_steps..]`.
    pub lk_values: Option<Vec<f64>>,
    pub diverged: bool,
}

impl DelayTrajectory {
    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    /// Index of `t = 0` in `times`.
    pub fn origin(&self) -> usize {
        self.delay_steps
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory holds the initial segment")
    }

    pub fn attach_certificate(&mut self, cert: &RiccatiCertificate) -> Result<()> {
        self.lk_values = Some(lk_functional(self, cert)?.into_iter().map(|(_, v)| v).collect());
        Ok(())
    }

    /// CSV with header `t,x_1,…,x_n,V`; `V` is blank before `t = 0` or when
    /// no certificate is attached.
    pub fn to_csv(&self) -> String {
        let n = self.dim();
        let mut out = String::from("t");
        for i in 1..=n {
            write!(out, ",x_{i}").unwrap();
        }
        out.push_str(",V\n");
        for (k, (t, x)) in self.times.iter().zip(&self.states).enumerate() {
            write!(out, "{t}").unwrap();
            for v in x {
                write!(out, ",{v}").unwrap();
            }
            out.push(',');
            if let Some(v) = k
                .checked_sub(self.delay_steps)
                .and_then(|j| self.lk_values.as_ref()?.get(j))
            {
                write!(out, "{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Snaps `h` down so that `τ/h` is an integer. Returns `(h', τ/h')`.
pub fn snap_step(tau: f64, h: f64) -> (f64, usize) {
    if tau == 0.0 {
        return (h, 0);
    }
    let m = (tau / h - 1e-9).ceil().max(1.0) as usize;
    (tau / m as f64, m)
}

pub fn simulate(pair: &MatrixPair, tau: f64, phi: &[f64], horizon: f64, h: f64) -> Result<DelayTrajectory> {
    let n = pair.n();
    if phi.len() != n {
        return Err(Error::Dimension(format!("φ has length {} for a pair of size {n}", phi.len())));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Contract(format!("step must be positive, got {h}")));
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::Contract(format!("delay must be nonnegative, got {tau}")));
    }
    if !(horizon >= tau && horizon.is_finite()) {
        return Err(Error::Contract(format!("horizon {horizon} is shorter than the delay {tau}")));
    }
    if phi.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("initial function has a non-finite entry".into()));
    }

    let (h, m) = snap_step(tau, h);
    let steps = (horizon / h - 1e-9).ceil() as usize;
    let (a, b) = (pair.a(), pair.b());
    let sum = a + b;

    let mut times: Vec<f64> = (0..=m).map(|k| -tau + k as f64 * h).collect();
    let mut states = vec![phi.to_vec(); m + 1];
    // Right derivatives at the nodes t ≥ 0; the history is constant.
    let mut slopes: Vec<Vec<f64>> = Vec::with_capacity(steps + 1);
    let rhs = |x: &[f64], xd: &[f64]| -> Vec<f64> {
        let ax = a.matvec(x).expect("shape checked");
        let bx = b.matvec(xd).expect("shape checked");
        ax.iter().zip(&bx).map(|(u, v)| u + v).collect()
    };
    slopes.push(if m == 0 { sum.matvec(phi)? } else { rhs(phi, phi) });

    let mut diverged = false;
    for step in 0..steps {
        let k = m + step;
        let x = &states[k];
        let next = if m == 0 {
            rk4_undelayed(&sum, x, h)
        } else {
            let j = k - m;
            let lo = &states[j];
            let hi = &states[j + 1];
            let mid = if j < m {
                lo.clone()
            } else {
                hermite_midpoint(lo, hi, &slopes[j - m], &slopes[j + 1 - m], h)
            };
            let k1 = &slopes[step];
            let k2 = rhs(&axpy(x, 0.5 * h, k1), &mid);
            let k3 = rhs(&axpy(x, 0.5 * h, &k2), &mid);
            let k4 = rhs(&axpy(x, h, &k3), hi);
            combine(x, h, k1, &k2, &k3, &k4)
        };
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm > BLOW_UP {
            diverged = true;
            break;
        }
        let slope = if m == 0 {
            sum.matvec(&next)?
        } else {
            rhs(&next, &states[k + 1 - m])
        };
        times.push((step + 1) as f64 * h);
        states.push(next);
        slopes.push(slope);
    }

    Ok(DelayTrajectory {
        h,
        tau,
        delay_steps: m,
        times,
        states,
        lk_values: None,
        diverged,
    })
}

fn axpy(x: &[f64], s: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a + s * b).collect()
}

fn combine(x: &[f64], h: f64, k1: &[f64], k2: &[f64], k3: &[f64], k4: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

fn rk4_undelayed(m: &DenseMatrix, x: &[f64], h: f64) -> Vec<f64> {
    let f = |y: &[f64]| m.matvec(y).expect("shape checked");
    let k1 = f(x);
    let k2 = f(&axpy(x, 0.5 * h, &k1));
    let k3 = f(&axpy(x, 0.5 * h, &k2));
    let k4 = f(&axpy(x, h, &k3));
    combine(x, h, &k1, &k2, &k3, &k4)
}

/// Cubic Hermite value at the middle of an interval of length `h`.
fn hermite_midpoint(y0: &[f64], y1: &[f64], s0: &[f64], s1: &[f64], h: f64) -> Vec<f64> {
    (0..y0.len())
        .map(|i| 0.5 * (y0[i] + y1[i]) + h * (s0[i] - s1[i]) / 8.0)
        .collect()
}

fn quad(d: &DiagonalMatrix, x: &[f64]) -> f64 {
    d.entries().iter().zip(x).map(|(w, v)| w * v * v).sum()
}

/// `(t, V(t))` at every grid point with `t ≥ 0`. The integral term uses the
/// trapezoidal rule on the stored grid, updated as a sliding window.
pub fn lk_functional(traj: &DelayTrajectory, cert: &RiccatiCertificate) -> Result<Vec<(f64, f64)>> {
    let n = traj.dim();
    if cert.p.len() != n || cert.q.len() != n {
        return Err(Error::Dimension(format!("certificate size differs from state size {n}")));
    }
    let m = traj.delay_steps;
    if traj.states.len() <= m || traj.times.len() != traj.states.len() {
        return Err(Error::Contract("trajectory does not cover the initial delay interval".into()));
    }
    let g: Vec<f64> = traj.states.iter().map(|x| quad(&cert.q, x)).collect();
    let mut window: f64 = g[..=m].iter().sum();
    let mut out = Vec::with_capacity(traj.states.len() - m);
    for k in m..traj.states.len() {
        if k > m {
            window += g[k] - g[k - m - 1];
        }
        let integral = if m == 0 { 0.0 } else { traj.h * (window - 0.5 * (g[k - m] + g[k])) };
        out.push((traj.times[k], quad(&cert.p, &traj.states[k]) + integral));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayReport {
    pub tau: f64,
    pub h: f64,
    pub horizon: f64,
    pub final_norm: f64,
    /// Largest single-step increase of `V`.
    pub max_lk_increase: f64,
    pub lk_initial: f64,
    /// Final-norm bound used for `decayed`, `DECAY_THRESHOLD·‖φ‖`. A chosen
    /// cutoff, not a derived rate.
    pub threshold: f64,
    pub diverged: bool,
    pub decayed: bool,
}

/// Step budget for one run when the horizon is extended automatically.
pub const MAX_AUTO_STEPS: usize = 1_000_000;

/// Simulates from `φ = 𝟙` for each delay and checks that `V` never grows by
/// more than `LK_STEP_TOL·V(0)` in one step and that the final norm is below
/// `DECAY_THRESHOLD·‖φ‖`.
///
/// With `horizon = None` the run starts at [`default_horizon`] and the
/// horizon is doubled while `V` keeps decreasing but the state has not yet
/// decayed, up to [`MAX_AUTO_STEPS`] steps.
pub fn decay_check(
    pair: &MatrixPair,
    cert: &RiccatiCertificate,
    taus: &[f64],
    horizon: Option<f64>,
    h: f64,
) -> Result<Vec<DecayReport>> {
    if !verify_certificate(pair, &cert.p, &cert.q, 0.0)?.accepted {
        return Err(Error::Contract("certificate does not verify for this pair".into()));
    }
    let phi = vec![1.0; pair.n()];
    let phi_norm = (pair.n() as f64).sqrt();
    let run = |tau: f64, horizon: f64| -> Result<DecayReport> {
        let traj = simulate(pair, tau, &phi, horizon, h)?;
        decay_report(&traj, cert, horizon, phi_norm)
    };
    taus.iter()
        .map(|&tau| {
            if let Some(horizon) = horizon {
                return run(tau, horizon.max(tau));
            }
            let mut horizon = default_horizon(tau).max(tau);
            loop {
                let report = run(tau, horizon)?;
                let monotone = report.max_lk_increase <= LK_STEP_TOL * report.lk_initial;
                let next_steps = (2.0 * (horizon + tau) / h).ceil();
                if report.decayed || report.diverged || !monotone || next_steps > MAX_AUTO_STEPS as f64 {
                    return Ok(report);
                }
                horizon *= 2.0;
            }
        })
        .collect()
}

/// Report for an already simulated trajectory.
pub fn decay_report(
    traj: &DelayTrajectory,
    cert: &RiccatiCertificate,
    horizon: f64,
    phi_norm: f64,
) -> Result<DecayReport> {
    let values: Vec<f64> = lk_functional(traj, cert)?.into_iter().map(|(_, v)| v).collect();
    let max_lk_increase = values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let final_norm = traj.final_state().iter().map(|v| v * v).sum::<f64>().sqrt();
    let lk_initial = values[0];
    let threshold = DECAY_THRESHOLD * phi_norm;
    let decayed = !traj.diverged
        && max_lk_increase <= LK_STEP_TOL * lk_initial
        && final_norm < threshold;
    Ok(DecayReport {
        tau: traj.tau,
        h: traj.h,
        horizon,
        final_norm,
        max_lk_increase,
        lk_initial,
        threshold,
        diverged: traj.diverged,
        decayed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar(a: f64, b: f64) -> MatrixPair {
        MatrixPair::from_rows(&[vec![a]], &[vec![b]]).unwrap()
    }

    fn unit_cert(pair: &MatrixPair) -> RiccatiCertificate {
        let n = pair.n();
        RiccatiCertificate::certify(pair, DiagonalMatrix::identity(n), DiagonalMatrix::identity(n)).unwrap()
    }

    #[test]
    fn undelayed_exponential() {
        let t = simulate(&scalar(-2.0, 0.0), 0.0, &[1.0], 5.0, 0.01).unwrap();
        let x = t.final_state()[0];
        assert_relative_eq!(x, (-10f64).exp(), max_relative = 1e-6);
        assert_eq!(*t.times.last().unwrap(), 5.0);
    }

    #[test]
    fn zero_delay_is_a_plus_b() {
        let t = simulate(&scalar(-2.0, 1.5), 0.0, &[1.0], 3.0, 0.01).unwrap();
        let mut x = 1.0f64;
        for (k, s) in t.states.iter().enumerate().skip(1) {
            let f = |y: f64| -0.5 * y;
            let (h, k1) = (0.01, f(x));
            let k2 = f(x + 0.5 * h * k1);
            let k3 = f(x + 0.5 * h * k2);
            let k4 = f(x + h * k3);
            x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            assert!((s[0] - x).abs() <= 1e-8, "step {k}");
        }
    }

    #[test]
    fn step_snapping() {
        let (h, m) = snap_step(1.0, 0.03);
        assert_eq!(m, 34);
        assert!(h <= 0.03 && (h * m as f64 - 1.0).abs() < 1e-15);
        assert_eq!(snap_step(1.0, 0.01).1, 100);
        let t = simulate(&scalar(-2.0, 1.0), 1.0, &[1.0], 2.0, 0.03).unwrap();
        assert_eq!(t.times[0], -1.0);
        assert!((t.times[t.origin()]).abs() < 1e-15);
    }

    #[test]
    fn delayed_scalar_decays() {
        let t = simulate(&scalar(-2.0, 1.0), 1.0, &[1.0], 10.0, 0.01).unwrap();
        let fine = simulate(&scalar(-2.0, 1.0), 1.0, &[1.0], 10.0, 0.001).unwrap();
        let x10 = t.final_state()[0];
        assert!((x10 - fine.final_state()[0]).abs() < 1e-10);
        // dominant root of λ = −2 + e^{−λ} is ≈ −0.443, so x(10) ≈ 0.0105
        assert!(x10 > 0.0 && x10 < 1.1e-2, "{x10}");
        let tail = &t.states[t.origin()..];
        assert!(tail.windows(2).all(|w| w[1][0] <= w[0][0]));
        // first step: x(h) = e^{-2h}·1 + (1 − e^{-2h})/2 from the constant history
        let h: f64 = 0.01;
        let exact = (-2.0 * h).exp() + 0.5 * (1.0 - (-2.0 * h).exp());
        assert_relative_eq!(t.states[t.origin() + 1][0], exact, max_relative = 1e-10);
    }

    #[test]
    fn fourth_order_under_step_halving() {
        let pair = scalar(-2.0, 1.0);
        let end = |h: f64| simulate(&pair, 1.0, &[1.0], 4.0, h).unwrap().final_state()[0];
        let (x1, x2, x4) = (end(0.1), end(0.05), end(0.025));
        let ratio = (x1 - x2).abs() / (x2 - x4).abs();
        assert!(ratio >= 8.0, "ratio {ratio}");
    }

    #[test]
    fn lk_functional_examples() {
        let pair = scalar(-2.0, 1.0);
        let cert = unit_cert(&pair);
        let zero = simulate(&pair, 1.0, &[0.0], 2.0, 0.01).unwrap();
        assert!(lk_functional(&zero, &cert).unwrap().iter().all(|&(_, v)| v == 0.0));

        let t = simulate(&pair, 1.0, &[1.0], 2.0, 0.01).unwrap();
        let v = lk_functional(&t, &cert).unwrap();
        assert!((v[0].1 - 2.0).abs() < 1e-12);
        assert_eq!(v[0].0, t.times[t.origin()]);

        let t0 = simulate(&pair, 0.0, &[1.0], 2.0, 0.01).unwrap();
        for ((_, v), x) in lk_functional(&t0, &cert).unwrap().iter().zip(&t0.states) {
            assert_eq!(*v, x[0] * x[0]);
        }
    }

    #[test]
    fn lk_dissipation_rate() {
        // P = Q = 1 gives the block form [[-3, 1], [1, -1]], margin 2 - √2.
        let pair = scalar(-2.0, 1.0);
        let cert = unit_cert(&pair);
        assert_relative_eq!(cert.margin, 2.0 - 2f64.sqrt(), epsilon = 1e-12);
        let mut t = simulate(&pair, 1.0, &[1.0], 10.0, 0.01).unwrap();
        t.attach_certificate(&cert).unwrap();
        let v = t.lk_values.clone().unwrap();
        let xs = &t.states[t.origin()..];
        for k in 0..v.len() - 1 {
            let rate = (v[k + 1] - v[k]) / t.h;
            let floor = xs[k][0].powi(2).min(xs[k + 1][0].powi(2));
            assert!(rate <= -cert.margin * floor + 1e-6, "step {k}: {rate} vs {floor}");
        }
    }

    #[test]
    fn decay_for_feasible_scalar() {
        let pair = scalar(-2.0, 1.0);
        let reports = decay_check(&pair, &unit_cert(&pair), &[0.0, 0.5, 2.0], None, 0.01).unwrap();
        for r in reports {
            assert!(r.decayed, "{r:?}");
        }
    }

    #[test]
    fn infeasible_pair_does_not_decay() {
        let pair = scalar(-1.0, 2.0);
        let t = simulate(&pair, 2.0, &[1.0], 40.0, 0.01).unwrap();
        let norm = t.final_state()[0].abs();
        assert!(t.diverged || norm > 1.0);
        // certificate checks refuse to run on this pair
        let fake = RiccatiCertificate {
            p: DiagonalMatrix::identity(1),
            q: DiagonalMatrix::identity(1),
            margin: 1.0,
        };
        assert!(decay_check(&pair, &fake, &[2.0], None, 0.01).is_err());
    }

    #[test]
    fn csv_layout() {
        let pair = scalar(-2.0, 1.0);
        let mut t = simulate(&pair, 0.5, &[1.0], 1.0, 0.25).unwrap();
        t.attach_certificate(&unit_cert(&pair)).unwrap();
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,x_1,V");
        assert_eq!(lines.len(), 1 + t.times.len());
        assert!(lines[1].ends_with(','));
        assert!(!lines[3].ends_with(','));
    }

    #[test]
    fn bad_arguments() {
        let pair = scalar(-2.0, 1.0);
        assert!(simulate(&pair, 1.0, &[1.0], 5.0, 0.0).is_err());
        assert!(simulate(&pair, -1.0, &[1.0], 5.0, 0.1).is_err());
        assert!(simulate(&pair, 2.0, &[1.0], 1.0, 0.1).is_err());
        assert!(simulate(&pair, 1.0, &[1.0, 2.0], 5.0, 0.1).is_err());
    }
}
