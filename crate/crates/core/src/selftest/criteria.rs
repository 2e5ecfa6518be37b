use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gen::{self, ReducibleClass, BOUNDARY};
use super::{CriterionResult, SelftestOptions};
use crate::classes::{lag_bound, lag_bound_oracle, structured_condition, Stability};
use crate::ddesim::{decay_check, simulate};
use crate::error::{Error, Result};
use crate::matcore::{is_hurwitz, DenseMatrix, HurwitzStatus};
use crate::pmatrix::{dpd_conjugate, is_p_matrix};
use crate::riccati::{
    random_correlation, refute_with, solve_diagonal, verify_certificate, MatrixPair,
    RefuteOptions, Verdict, PSD_TOL,
};
use crate::transforms::{dad_transform, hadamard_congruence};

const MAX_LISTED_FAILURES: usize = 5;
/// Draw cap when collecting solver-feasible pairs.
const MAX_FEASIBLE_DRAWS: usize = 100_000;
pub const DELAYS: [f64; 5] = [0.0, 0.1, 1.0, 5.0, 25.0];

/// Solver verdict recorded for the soundness audit.
struct Observation {
    pair: MatrixPair,
    verdict: Verdict,
}

struct Tally {
    id: u8,
    title: &'static str,
    counts: BTreeMap<String, usize>,
    failures: Vec<String>,
    failed: usize,
}

impl Tally {
    fn new(id: u8, title: &'static str) -> Self {
        Self {
            id,
            title,
            counts: BTreeMap::new(),
            failures: Vec::new(),
            failed: 0,
        }
    }

    fn bump(&mut self, key: &str) {
        *self.counts.entry(key.to_string()).or_default() += 1;
    }

    fn fail(&mut self, what: String) {
        self.failed += 1;
        if self.failures.len() < MAX_LISTED_FAILURES {
            self.failures.push(what);
        }
    }

    fn finish(mut self, extra_ok: bool) -> CriterionResult {
        self.counts.insert("failed".into(), self.failed);
        CriterionResult {
            id: self.id,
            title: self.title,
            passed: self.failed == 0 && extra_ok,
            counts: self.counts,
            failures: self.failures,
        }
    }
}

fn rng_for(opts: &SelftestOptions, id: u8) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(opts.seed ^ (u64::from(id) << 56) ^ 0x9e37_79b9_7f4a_7c15)
}

fn describe(pair: &MatrixPair) -> String {
    format!("A={:?} B={:?}", pair.a().to_rows(), pair.b().to_rows())
}

/// Compares a solver verdict with an expected label, counting Unknown as a
/// failure.
fn compare(t: &mut Tally, pair: &MatrixPair, verdict: &Verdict, stable: bool) {
    t.bump("cases");
    t.bump(if stable { "stable" } else { "unstable" });
    match (verdict, stable) {
        (Verdict::Feasible(_), true) | (Verdict::Refuted { .. }, false) => t.bump("agree"),
        (Verdict::Unknown { .. }, _) => {
            t.bump("unknown");
            t.fail(format!("Unknown on {}", describe(pair)));
        }
        _ => t.fail(format!(
            "{} but expected {} on {}",
            verdict.status(),
            if stable { "stable" } else { "unstable" },
            describe(pair)
        )),
    }
}

pub fn run_criterion(id: u8, opts: &SelftestOptions) -> Result<CriterionResult> {
    let mut sink = Vec::new();
    match id {
        1 => positive_systems(opts, &mut sink),
        2 => three_by_three(opts, &mut sink),
        3 => reducible_classes(opts, &mut sink),
        4 => certificate_map(opts, &mut sink),
        5 => hadamard_invariance(opts, &mut sink),
        6 => {
            positive_systems(opts, &mut sink)?;
            three_by_three(opts, &mut sink)?;
            reducible_classes(opts, &mut sink)?;
            certificate_map(opts, &mut sink)?;
            hadamard_invariance(opts, &mut sink)?;
            p_matrix_links(opts, &mut sink)?;
            refuter_soundness(opts, &sink)
        }
        7 => lag_bound_suite(opts),
        8 => p_matrix_links(opts, &mut sink),
        9 => delay_independence(opts),
        _ => Err(Error::Input(format!("no criterion {id} (valid: 1 to 9)"))),
    }
}

pub(super) fn run_all(opts: &SelftestOptions) -> Result<Vec<CriterionResult>> {
    let mut sink = Vec::new();
    let c1 = positive_systems(opts, &mut sink)?;
    let c2 = three_by_three(opts, &mut sink)?;
    let c3 = reducible_classes(opts, &mut sink)?;
    let c4 = certificate_map(opts, &mut sink)?;
    let c5 = hadamard_invariance(opts, &mut sink)?;
    let c8 = p_matrix_links(opts, &mut sink)?;
    let c6 = refuter_soundness(opts, &sink)?;
    let c7 = lag_bound_suite(opts)?;
    let c9 = delay_independence(opts)?;
    Ok(vec![c1, c2, c3, c4, c5, c6, c7, c8, c9])
}

fn positive_systems(opts: &SelftestOptions, sink: &mut Vec<Observation>) -> Result<CriterionResult> {
    let mut t = Tally::new(1, "Metzler/nonnegative pairs: solver agrees with A+B Hurwitz");
    let mut rng = rng_for(opts, 1);
    for (pair, stable) in gen::metzler_nonneg(&mut rng, 200) {
        let verdict = solve_diagonal(&pair, &opts.solver)?;
        compare(&mut t, &pair, &verdict, stable);
        sink.push(Observation { pair, verdict });
    }
    Ok(t.finish(true))
}

fn three_by_three(opts: &SelftestOptions, sink: &mut Vec<Observation>) -> Result<CriterionResult> {
    let mut t = Tally::new(2, "3x3 families: closed-form conditions agree with the solver");
    let mut rng = rng_for(opts, 2);
    let families = [("ab1", gen::ab1(&mut rng, 200)), ("ab2", gen::ab2(&mut rng, 200))];
    for (name, cases) in families {
        for (pair, stable) in cases {
            t.bump(name);
            let verdict = solve_diagonal(&pair, &opts.solver)?;
            compare(&mut t, &pair, &verdict, stable);
            sink.push(Observation { pair, verdict });
        }
    }
    Ok(t.finish(true))
}

fn reducible_classes(opts: &SelftestOptions, sink: &mut Vec<Observation>) -> Result<CriterionResult> {
    let mut t = Tally::new(3, "signature-reducible classes: Ahat+Bbar condition agrees with the solver");
    let mut rng = rng_for(opts, 3);
    for class in ReducibleClass::ALL {
        for (pair, _) in gen::reducible(&mut rng, class, 100) {
            t.bump(class.name());
            // The reduction asserts DAD = Â and DBE = B̄ internally.
            let cv = match structured_condition(&pair) {
                Ok(cv) => cv,
                Err(e) => {
                    t.fail(format!("{}: {e} on {}", class.name(), describe(&pair)));
                    continue;
                }
            };
            let stable = match cv.stable {
                Stability::Stable => true,
                Stability::NotStable => false,
                Stability::Marginal => {
                    t.fail(format!("marginal class verdict on {}", describe(&pair)));
                    continue;
                }
            };
            let verdict = solve_diagonal(&pair, &opts.solver)?;
            compare(&mut t, &pair, &verdict, stable);
            sink.push(Observation { pair, verdict });
        }
    }
    Ok(t.finish(true))
}

/// Draws general pairs until `count` are certified by the solver.
fn feasible_pairs(
    rng: &mut ChaCha8Rng,
    opts: &SelftestOptions,
    count: usize,
    sink: &mut Vec<Observation>,
) -> Result<Vec<(MatrixPair, crate::riccati::RiccatiCertificate)>> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..MAX_FEASIBLE_DRAWS {
        if out.len() == count {
            break;
        }
        let pair = gen::shifted_general(rng);
        let verdict = solve_diagonal(&pair, &opts.solver)?;
        if let Some(cert) = verdict.certificate() {
            out.push((pair.clone(), cert.clone()));
        }
        sink.push(Observation { pair, verdict });
    }
    Ok(out)
}

fn certificate_map(opts: &SelftestOptions, sink: &mut Vec<Observation>) -> Result<CriterionResult> {
    let mut t = Tally::new(4, "(P, Q) -> (P, DQD) certifies (DAD, DBE)");
    let mut rng = rng_for(opts, 4);
    let pairs = feasible_pairs(&mut rng, opts, 100, sink)?;
    for (pair, cert) in &pairs {
        t.bump("cases");
        let scaling = gen::admissible_scaling(&mut rng, pair.n());
        let (mapped_pair, map) = dad_transform(pair, &scaling)?;
        let (p, q) = map.apply(&cert.p, &cert.q);
        let check = verify_certificate(&mapped_pair, &p, &q, 0.0)?;
        if check.accepted && check.margin > 0.0 {
            t.bump("certified");
        } else {
            t.fail(format!("mapped margin {:e} on {}", check.margin, describe(pair)));
        }
    }
    Ok(t.finish(pairs.len() == 100))
}

fn hadamard_invariance(opts: &SelftestOptions, sink: &mut Vec<Observation>) -> Result<CriterionResult> {
    let mut t = Tally::new(5, "(A o S11, B o S12) stays feasible, at most 5% Unknown");
    let mut rng = rng_for(opts, 5);
    let pairs = feasible_pairs(&mut rng, opts, 100, sink)?;
    let mut unknown = 0;
    for (pair, _) in &pairs {
        t.bump("cases");
        let s = random_correlation(2 * pair.n(), &mut rng)?;
        let image = hadamard_congruence(pair, &s)?;
        let verdict = solve_diagonal(&image, &opts.solver)?;
        match &verdict {
            Verdict::Feasible(_) => t.bump("feasible"),
            Verdict::Unknown { .. } => {
                unknown += 1;
                t.bump("unknown");
            }
            Verdict::Refuted { .. } => {
                t.fail(format!("image refuted for {}", describe(pair)));
            }
        }
        sink.push(Observation {
            pair: image,
            verdict,
        });
    }
    Ok(t.finish(pairs.len() == 100 && unknown * 20 <= pairs.len()))
}

fn refuter_soundness(opts: &SelftestOptions, seen: &[Observation]) -> Result<CriterionResult> {
    let mut t = Tally::new(6, "witnesses are valid and never coexist with certificates");
    let full = RefuteOptions {
        samples: opts.solver.samples,
        seed: opts.seed,
        ..RefuteOptions::default()
    };
    for obs in seen {
        match &obs.verdict {
            Verdict::Refuted { witness, .. } => {
                t.bump("witnesses");
                let s = &witness.s;
                let unit = s.full().diagonal().iter().all(|&d| d == 1.0);
                let min_eig = s.lambda_min()?;
                let image = obs.pair.hadamard_image(s)?;
                let fails_p = !is_p_matrix(&-&image)?.is_p;
                if !(unit && min_eig >= -PSD_TOL && fails_p) {
                    t.fail(format!(
                        "invalid witness (unit {unit}, λ_min {min_eig:e}, fails P {fails_p}) on {}",
                        describe(&obs.pair)
                    ));
                }
            }
            Verdict::Feasible(cert) => {
                t.bump("certificates");
                let ok = verify_certificate(&obs.pair, &cert.p, &cert.q, 0.0)?.accepted;
                let witness = refute_with(&obs.pair, &full)?.witness;
                if !ok || witness.is_some() {
                    t.fail(format!("certificate contradicted on {}", describe(&obs.pair)));
                }
            }
            Verdict::Unknown { .. } => t.bump("unknown"),
        }
    }
    Ok(t.finish(true))
}

fn lag_bound_suite(opts: &SelftestOptions) -> Result<CriterionResult> {
    let mut t = Tally::new(7, "grid maximum of |Cx + Dyz| within [bound - 0.05, bound + 1e-9]");
    let mut rng = rng_for(opts, 7);
    for _ in 0..50 {
        let mut coef = || loop {
            let v: f64 = rng.random_range(-3.0..=3.0);
            if v.abs() >= 0.1 {
                break v;
            }
        };
        let (c, d) = (coef(), coef());
        t.bump("cases");
        let bound = lag_bound(c, d)?;
        let grid = lag_bound_oracle(c, d, 0.01)?;
        if !(grid <= bound + 1e-9 && grid >= bound - 0.05) {
            t.fail(format!("C={c} D={d}: grid {grid} vs bound {bound}"));
        }
    }
    Ok(t.finish(true))
}

fn p_matrix_links(opts: &SelftestOptions, sink: &mut Vec<Observation>) -> Result<CriterionResult> {
    let mut t = Tally::new(8, "diagonal stability gives -A a P-matrix; P status invariant under DMD");
    let mut rng = rng_for(opts, 8);

    let mut found = 0;
    for _ in 0..MAX_FEASIBLE_DRAWS {
        if found == 100 {
            break;
        }
        let general = gen::shifted_general(&mut rng);
        let n = general.n();
        let pair = MatrixPair::new(general.a().clone(), DenseMatrix::zeros(n, n))?;
        let verdict = solve_diagonal(&pair, &opts.solver)?;
        if verdict.is_feasible() {
            found += 1;
            t.bump("stable_a");
            if !is_p_matrix(&-pair.a())?.is_p {
                t.fail(format!("-A not a P-matrix for {}", describe(&pair)));
            }
        }
        sink.push(Observation { pair, verdict });
    }

    for _ in 0..200 {
        let m = gen::p_candidate(&mut rng);
        let d = gen::positive_diagonal(&mut rng, m.rows());
        let before = is_p_matrix(&m)?.is_p;
        let after = is_p_matrix(&dpd_conjugate(&m, &d)?)?.is_p;
        t.bump(if before { "p" } else { "not_p" });
        if before != after {
            t.fail(format!("P status changed under DMD for M={:?}", m.to_rows()));
        }
    }
    Ok(t.finish(found == 100))
}

fn delay_independence(opts: &SelftestOptions) -> Result<CriterionResult> {
    let mut t = Tally::new(9, "one certificate gives decay for every delay");
    let mut rng = rng_for(opts, 9);
    let mut pairs = Vec::new();
    for _ in 0..MAX_FEASIBLE_DRAWS {
        if pairs.len() == 20 {
            break;
        }
        let pair = gen::shifted_general(&mut rng);
        let h = is_hurwitz(&(pair.a() + pair.b()))?;
        if h.status != HurwitzStatus::Hurwitz || h.abscissa > -BOUNDARY {
            continue;
        }
        if let Verdict::Feasible(cert) = solve_diagonal(&pair, &opts.solver)? {
            pairs.push((pair, cert));
        }
    }
    for (pair, cert) in &pairs {
        for report in decay_check(pair, cert, &DELAYS, opts.horizon, opts.step)? {
            t.bump("runs");
            if !report.decayed {
                t.fail(format!("τ={} no decay ({report:?}) on {}", report.tau, describe(pair)));
            }
        }
        let gap = zero_delay_gap(pair, opts.step)?;
        if gap > 1e-8 {
            t.fail(format!("τ=0 run differs from A+B by {gap:e} on {}", describe(pair)));
        }
    }
    Ok(t.finish(pairs.len() == 20))
}

/// Largest per-step difference between the `τ = 0` delay run and a plain
/// RK4 integration of `ẋ = (A + B)x`, relative to `‖φ‖`.
fn zero_delay_gap(pair: &MatrixPair, h: f64) -> Result<f64> {
    let n = pair.n();
    let phi = vec![1.0; n];
    let traj = simulate(pair, 0.0, &phi, 10.0, h)?;
    let m = pair.a() + pair.b();
    let f = |x: &[f64]| m.matvec(x).expect("square");
    let mut x = phi.clone();
    let mut gap = 0.0f64;
    for state in &traj.states[1..] {
        let k1 = f(&x);
        let y: Vec<f64> = (0..n).map(|i| x[i] + 0.5 * h * k1[i]).collect();
        let k2 = f(&y);
        let y: Vec<f64> = (0..n).map(|i| x[i] + 0.5 * h * k2[i]).collect();
        let k3 = f(&y);
        let y: Vec<f64> = (0..n).map(|i| x[i] + h * k3[i]).collect();
        let k4 = f(&y);
        for i in 0..n {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            gap = gap.max((x[i] - state[i]).abs());
        }
    }
    Ok(gap / (n as f64).sqrt())
}
