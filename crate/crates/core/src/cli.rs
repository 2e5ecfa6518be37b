//! Batch front-end: reads a JSON problem file, runs one command, and writes a
//! JSON (or, for trajectories, CSV) report.
//!
//! Exit codes: `0` for a definitive answer, `2` when the answer is `Unknown`
//! or marginal, `1` for input errors and a failing self-test.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::classes::{class_condition, ClassTag, ClassVerdict, Stability};
use crate::ddesim::{decay_report, simulate, DecayReport, DEFAULT_STEP};
use crate::error::{Error, Result};
use crate::matcore::{BlockSymmetric, DenseMatrix, DiagonalMatrix};
use crate::riccati::{
    refute_with, solve_diagonal, MatrixPair, RefuteOptions, RiccatiCertificate, SolverOptions,
    Verdict, VerdictReport,
};
use crate::selftest::{run_selftest, SelftestOptions};
use crate::transforms::{dad_transform, hadamard_certificate, hadamard_congruence, ScalingPair};

pub const EXIT_DEFINITIVE: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "diagstab", version, about = "Diagonal Riccati stability of delay-system matrix pairs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Search for a diagonal certificate or a correlation witness.
    Check,
    /// Detect a structured class and evaluate its closed-form condition.
    Classify,
    /// Look for a correlation witness only.
    Refute,
    /// Apply (D, E) or S from the problem file and carry the certificate along.
    Transform,
    /// Integrate the delay system from the constant history.
    Simulate,
    /// Run the randomized acceptance suites.
    Selftest,
}

#[derive(clap::Args, Debug, Default)]
struct Flags {
    /// Problem file (JSON). Not needed for `selftest`.
    #[arg(global = true)]
    problem: Option<PathBuf>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long = "max-iter", global = true)]
    max_iter: Option<usize>,
    /// Comma-separated delays.
    #[arg(long, global = true, value_delimiter = ',')]
    tau: Option<Vec<f64>>,
    #[arg(long, global = true)]
    horizon: Option<f64>,
    #[arg(long, global = true)]
    step: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Default)]
enum Format {
    #[default]
    Json,
    Csv,
}

/// Contents of a problem file.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(rename = "A")]
    pub a: DenseMatrix,
    #[serde(rename = "B")]
    pub b: DenseMatrix,
    #[serde(default)]
    pub tau: Option<Vec<f64>>,
    #[serde(default)]
    pub options: ProblemOptions,
    /// Scalings for `transform`.
    #[serde(rename = "D", default)]
    pub d: Option<DiagonalMatrix>,
    #[serde(rename = "E", default)]
    pub e: Option<DiagonalMatrix>,
    /// Correlation matrix for `transform`.
    #[serde(rename = "S", default)]
    pub s: Option<DenseMatrix>,
    /// Initial history for `simulate`; defaults to all ones.
    #[serde(default)]
    pub phi: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemOptions {
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub max_iter: Option<usize>,
    pub horizon: Option<f64>,
    pub step: Option<f64>,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text).map_err(|e| Error::Input(e.to_string()))?;
        file.pair()?;
        Ok(file)
    }

    pub fn pair(&self) -> Result<MatrixPair> {
        MatrixPair::new(self.a.clone(), self.b.clone())
    }
}

/// Options after merging flags over file options over defaults.
#[derive(Clone, Debug)]
struct Settings {
    solver: SolverOptions,
    taus: Vec<f64>,
    horizon: Option<f64>,
    step: f64,
}

impl Settings {
    fn merge(flags: &Flags, file: Option<&ProblemFile>) -> Result<Self> {
        let o = file.map(|f| f.options.clone()).unwrap_or_default();
        let mut solver = SolverOptions::default();
        if let Some(tol) = flags.tol.or(o.tol) {
            solver.tol = tol;
        }
        if let Some(seed) = flags.seed.or(o.seed) {
            solver.seed = seed;
        }
        if let Some(samples) = flags.samples.or(o.samples) {
            solver.samples = samples;
        }
        if let Some(max_iter) = flags.max_iter.or(o.max_iter) {
            solver.max_iter = max_iter;
        }
        let taus = flags
            .tau
            .clone()
            .or_else(|| file.and_then(|f| f.tau.clone()))
            .unwrap_or_else(|| vec![0.0]);
        let settings = Self {
            solver,
            taus,
            horizon: flags.horizon.or(o.horizon),
            step: flags.step.or(o.step).unwrap_or(DEFAULT_STEP),
        };
        settings.validate()?;
        Ok(settings)
    }

    fn validate(&self) -> Result<()> {
        if !(self.solver.tol.is_finite() && self.solver.tol >= 0.0) {
            return Err(Error::Input(format!("--tol must be finite and nonnegative, got {}", self.solver.tol)));
        }
        if let Some(t) = self.taus.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(Error::Input(format!("delays must be finite and nonnegative, got {t}")));
        }
        if let Some(h) = self.horizon.filter(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::Input(format!("--horizon must be positive, got {h}")));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::Input(format!("--step must be positive, got {}", self.step)));
        }
        Ok(())
    }
}

/// Output of `classify`: the class verdict, or the numeric verdict when the
/// pair has no closed-form class.
#[derive(Serialize)]
#[serde(untagged)]
enum ClassifyReport {
    Structured(ClassVerdict),
    Fallback {
        tag: ClassTag,
        check: VerdictReport,
    },
}

#[derive(Serialize)]
struct RefuteReport {
    witness: Option<WitnessReport>,
    samples_tried: usize,
}

#[derive(Serialize)]
struct WitnessReport {
    #[serde(rename = "S")]
    s: BlockSymmetric,
    failing_subset: Vec<usize>,
    failing_minor: f64,
    min_eigenvalue: f64,
}

#[derive(Serialize)]
struct TransformReport {
    #[serde(rename = "A")]
    a: DenseMatrix,
    #[serde(rename = "B")]
    b: DenseMatrix,
    source: VerdictReport,
    mapped_certificate: Option<RiccatiCertificate>,
}

#[derive(Serialize)]
struct SimulateReport {
    check: VerdictReport,
    runs: Vec<SimulationRun>,
}

#[derive(Serialize)]
struct SimulationRun {
    tau: f64,
    h: f64,
    horizon: f64,
    final_norm: f64,
    diverged: bool,
    /// Present when a certificate was found.
    decay: Option<DecayReport>,
}

struct Output {
    body: String,
    code: i32,
}

/// Parses `args` (program name first), runs the command and writes the
/// report to `--out` or `stdout`. Diagnostics go to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let shown = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = if shown {
                write!(stdout, "{e}")
            } else {
                write!(stderr, "{e}")
            };
            return if shown { EXIT_DEFINITIVE } else { EXIT_INPUT };
        }
    };
    match execute(&cli) {
        Ok(out) => {
            if let Err(e) = emit(&cli.flags.out, &out.body, stdout) {
                let _ = writeln!(stderr, "error: {e}");
                return EXIT_INPUT;
            }
            out.code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_INPUT
        }
    }
}

fn emit(out: &Option<PathBuf>, body: &str, stdout: &mut dyn Write) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, body),
        None => stdout.write_all(body.as_bytes()),
    }
}

fn load(path: Option<&Path>) -> Result<ProblemFile> {
    let path = path.ok_or_else(|| Error::Input("a problem file is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    ProblemFile::parse(&text)
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Numeric(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn verdict_code(v: &Verdict) -> i32 {
    match v {
        Verdict::Unknown { .. } => EXIT_UNKNOWN,
        _ => EXIT_DEFINITIVE,
    }
}

fn execute(cli: &Cli) -> Result<Output> {
    let flags = &cli.flags;
    if flags.format == Format::Csv && cli.command != Command::Simulate {
        return Err(Error::Input("--format csv is only available for simulate".into()));
    }
    if cli.command == Command::Selftest {
        let settings = Settings::merge(flags, None)?;
        let opts = SelftestOptions {
            seed: flags.seed.unwrap_or(SelftestOptions::default().seed),
            solver: settings.solver,
            step: settings.step,
            horizon: settings.horizon,
        };
        let report = run_selftest(&opts)?;
        let code = if report.passed { EXIT_DEFINITIVE } else { EXIT_INPUT };
        return Ok(Output {
            body: to_json(&report)?,
            code,
        });
    }

    let file = load(flags.problem.as_deref())?;
    let pair = file.pair()?;
    let settings = Settings::merge(flags, Some(&file))?;
    match cli.command {
        Command::Check => {
            let verdict = solve_diagonal(&pair, &settings.solver)?;
            Ok(Output {
                body: to_json(&verdict.to_report())?,
                code: verdict_code(&verdict),
            })
        }
        Command::Classify => classify_command(&pair, &settings),
        Command::Refute => refute_command(&pair, &settings),
        Command::Transform => transform_command(&pair, &file, &settings),
        Command::Simulate => simulate_command(&pair, &file, &settings, flags.format),
        Command::Selftest => unreachable!("handled above"),
    }
}

fn classify_command(pair: &MatrixPair, settings: &Settings) -> Result<Output> {
    let (body, code) = match class_condition(pair)? {
        Some(verdict) => {
            let code = match verdict.stable {
                Stability::Marginal => EXIT_UNKNOWN,
                _ => EXIT_DEFINITIVE,
            };
            (ClassifyReport::Structured(verdict), code)
        }
        None => {
            let verdict = solve_diagonal(pair, &settings.solver)?;
            let code = verdict_code(&verdict);
            (
                ClassifyReport::Fallback {
                    tag: ClassTag::Unstructured,
                    check: verdict.to_report(),
                },
                code,
            )
        }
    };
    Ok(Output {
        body: to_json(&body)?,
        code,
    })
}

fn refute_command(pair: &MatrixPair, settings: &Settings) -> Result<Output> {
    let opts = RefuteOptions {
        samples: settings.solver.samples,
        seed: settings.solver.seed,
        psd_tol: settings.solver.psd_tol,
        ..RefuteOptions::default()
    };
    let outcome = refute_with(pair, &opts)?;
    let code = if outcome.witness.is_some() { EXIT_DEFINITIVE } else { EXIT_UNKNOWN };
    let report = RefuteReport {
        witness: outcome.witness.map(|w| WitnessReport {
            failing_subset: w.p_report.failing_subset.clone(),
            failing_minor: w.p_report.failing_minor,
            min_eigenvalue: w.min_eigenvalue,
            s: w.s,
        }),
        samples_tried: outcome.samples_tried,
    };
    Ok(Output {
        body: to_json(&report)?,
        code,
    })
}

fn transform_command(pair: &MatrixPair, file: &ProblemFile, settings: &Settings) -> Result<Output> {
    let verdict = solve_diagonal(pair, &settings.solver)?;
    let cert = verdict.certificate();
    let (image, mapped) = match (&file.d, &file.e, &file.s) {
        (Some(d), Some(e), None) => {
            let (image, map) = dad_transform(pair, &ScalingPair::new(d.clone(), e.clone()))?;
            let mapped = cert.map(|c| map.map_certificate(&image, c)).transpose()?;
            (image, mapped)
        }
        (None, None, Some(s)) => {
            let s = BlockSymmetric::new(s.clone())?;
            match cert {
                Some(c) => {
                    let (image, mapped) = hadamard_certificate(pair, &s, c)?;
                    (image, Some(mapped))
                }
                None => (hadamard_congruence(pair, &s)?, None),
            }
        }
        _ => {
            return Err(Error::Input(
                "transform needs either both D and E, or S, in the problem file".into(),
            ))
        }
    };
    let report = TransformReport {
        a: image.a().clone(),
        b: image.b().clone(),
        source: verdict.to_report(),
        mapped_certificate: mapped,
    };
    Ok(Output {
        body: to_json(&report)?,
        code: verdict_code(&verdict),
    })
}

fn simulate_command(
    pair: &MatrixPair,
    file: &ProblemFile,
    settings: &Settings,
    format: Format,
) -> Result<Output> {
    let n = pair.n();
    let phi = file.phi.clone().unwrap_or_else(|| vec![1.0; n]);
    if phi.len() != n || phi.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input(format!("phi must hold {n} finite entries")));
    }
    let phi_norm = phi.iter().map(|v| v * v).sum::<f64>().sqrt();
    let verdict = solve_diagonal(pair, &settings.solver)?;
    let cert = verdict.certificate();

    let mut runs = Vec::with_capacity(settings.taus.len());
    let mut csv = String::new();
    for &tau in &settings.taus {
        let horizon = settings
            .horizon
            .unwrap_or_else(|| crate::ddesim::default_horizon(tau))
            .max(tau);
        let mut traj = simulate(pair, tau, &phi, horizon, settings.step)?;
        let decay = match cert {
            Some(c) => {
                traj.attach_certificate(c)?;
                Some(decay_report(&traj, c, horizon, phi_norm)?)
            }
            None => None,
        };
        if format == Format::Csv {
            append_csv(&mut csv, tau, &traj.to_csv(), runs.is_empty());
        }
        let last = traj.final_state();
        runs.push(SimulationRun {
            tau: traj.tau,
            h: traj.h,
            horizon,
            final_norm: last.iter().map(|v| v * v).sum::<f64>().sqrt(),
            diverged: traj.diverged,
            decay,
        });
    }
    let body = match format {
        Format::Csv => csv,
        Format::Json => to_json(&SimulateReport {
            check: verdict.to_report(),
            runs,
        })?,
    };
    Ok(Output {
        body,
        code: verdict_code(&verdict),
    })
}

/// Prefixes every row of a trajectory CSV with its delay.
fn append_csv(buf: &mut String, tau: f64, csv: &str, with_header: bool) {
    let mut lines = csv.lines();
    if let Some(header) = lines.next() {
        if with_header {
            buf.push_str("tau,");
            buf.push_str(header);
            buf.push('\n');
        }
    }
    for line in lines {
        buf.push_str(&format!("{tau},{line}\n"));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_with(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("diagstab").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn problem(json: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(json.as_bytes()).unwrap();
        f
    }

    #[test]
    fn check_scalar_feasible() {
        let f = problem(r#"{"A": [[-2]], "B": [[1]]}"#);
        let (code, out, _) = run_with(&["check", f.path().to_str().unwrap()]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["status"], "Feasible");
    }

    #[test]
    fn check_scalar_refuted() {
        let f = problem(r#"{"A": [[-1]], "B": [[2]]}"#);
        let (code, out, _) = run_with(&["check", f.path().to_str().unwrap()]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["status"], "Refuted");
        assert!(v["witness_S"].is_array());
    }

    #[test]
    fn input_errors_exit_one() {
        let (code, _, err) = run_with(&["check", "--bogus"]);
        assert_eq!(code, 1);
        assert!(!err.is_empty());
        let f = problem(r#"{"A": [[-1, 0]], "B": [[2]]}"#);
        assert_eq!(run_with(&["check", f.path().to_str().unwrap()]).0, 1);
        let f = problem(r#"{"A": [[-1]], "B": [[2, 1], [0, 1]]}"#);
        assert_eq!(run_with(&["check", f.path().to_str().unwrap()]).0, 1);
        let f = problem("{not json");
        assert_eq!(run_with(&["check", f.path().to_str().unwrap()]).0, 1);
        assert_eq!(run_with(&["check"]).0, 1);
    }

    #[test]
    fn csv_only_for_simulate() {
        let f = problem(r#"{"A": [[-2]], "B": [[1]]}"#);
        assert_eq!(run_with(&["check", f.path().to_str().unwrap(), "--format", "csv"]).0, 1);
    }
}
