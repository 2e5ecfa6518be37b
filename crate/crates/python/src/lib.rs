//! Python bindings. Matrices are lists of rows, diagonal matrices are lists,
//! and reports come back as plain dicts mirroring the CLI's JSON.

use diagstab_core::classes::{class_condition, classify as detect_class, lag_bound as bound};
use diagstab_core::ddesim::{self, DEFAULT_STEP};
use diagstab_core::matcore::{self, BlockSymmetric, DenseMatrix, DiagonalMatrix};
use diagstab_core::pmatrix;
use diagstab_core::riccati::{self, RefuteOptions, RiccatiCertificate, SolverOptions};
use diagstab_core::transforms::{self, ScalingPair};
use diagstab_core::Error;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde::Serialize;
use serde_json::Value;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Numeric(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<DenseMatrix> {
    DenseMatrix::from_rows(&rows).map_err(py_err)
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

fn json_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) if !n.is_f64() => i.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, json_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

/// A pair `(A, B)` of the delay system `x'(t) = A x(t) + B x(t - tau)`.
#[pyclass(module = "diagstab", frozen)]
struct MatrixPair {
    inner: riccati::MatrixPair,
}

#[pymethods]
impl MatrixPair {
    #[new]
    fn new(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> PyResult<Self> {
        let inner = riccati::MatrixPair::new(matrix(a)?, matrix(b)?).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter(A)]
    fn a(&self) -> Vec<Vec<f64>> {
        self.inner.a().to_rows()
    }

    #[getter(B)]
    fn b(&self) -> Vec<Vec<f64>> {
        self.inner.b().to_rows()
    }

    /// Certificate search; returns the verdict report as a dict.
    #[pyo3(signature = (tol = 1e-7, seed = 0, samples = 256, starts = 8))]
    fn check<'py>(
        &self,
        py: Python<'py>,
        tol: f64,
        seed: u64,
        samples: usize,
        starts: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let opts = SolverOptions {
            tol,
            seed,
            samples,
            starts,
            ..SolverOptions::default()
        };
        let verdict = py
            .detach(|| riccati::solve_diagonal(&self.inner, &opts))
            .map_err(py_err)?;
        to_py(py, &verdict.to_report())
    }

    /// Closed-form class verdict; unstructured pairs give just the tag.
    fn classify<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        match class_condition(&self.inner).map_err(py_err)? {
            Some(v) => to_py(py, &v),
            None => to_py(py, &detect_class(&self.inner)),
        }
    }

    /// Witness search only. `None` when no witness turned up.
    #[pyo3(signature = (samples = 256, seed = 0))]
    fn refute<'py>(&self, py: Python<'py>, samples: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let opts = RefuteOptions {
            samples,
            seed,
            ..RefuteOptions::default()
        };
        let outcome = riccati::refute_with(&self.inner, &opts).map_err(py_err)?;
        match outcome.witness {
            Some(w) => to_py(py, &w),
            None => Ok(py.None().into_bound(py)),
        }
    }

    /// `(P, Q)` check; returns `(accepted, margin)`.
    fn verify(&self, p: Vec<f64>, q: Vec<f64>, tol: f64) -> PyResult<(bool, f64)> {
        let c = riccati::verify_certificate(
            &self.inner,
            &DiagonalMatrix::new(p),
            &DiagonalMatrix::new(q),
            tol,
        )
        .map_err(py_err)?;
        Ok((c.accepted, c.margin))
    }

    /// `(DAD, DBE)` for admissible diagonal scalings.
    fn scale(&self, d: Vec<f64>, e: Vec<f64>) -> PyResult<Self> {
        let scaling = ScalingPair::new(DiagonalMatrix::new(d), DiagonalMatrix::new(e));
        let (inner, _) = transforms::dad_transform(&self.inner, &scaling).map_err(py_err)?;
        Ok(Self { inner })
    }

    /// `(A o S11, B o S12)` for a correlation-shaped block matrix `S`.
    fn hadamard(&self, s: Vec<Vec<f64>>) -> PyResult<Self> {
        let s = BlockSymmetric::new(matrix(s)?).map_err(py_err)?;
        let inner = transforms::hadamard_congruence(&self.inner, &s).map_err(py_err)?;
        Ok(Self { inner })
    }

    /// Trajectory from a constant history; returns `{"t": [...], "x": [[...]]}`.
    #[pyo3(signature = (tau, phi = None, horizon = None, step = DEFAULT_STEP))]
    fn simulate<'py>(
        &self,
        py: Python<'py>,
        tau: f64,
        phi: Option<Vec<f64>>,
        horizon: Option<f64>,
        step: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let phi = phi.unwrap_or_else(|| vec![1.0; self.inner.n()]);
        let horizon = horizon.unwrap_or_else(|| ddesim::default_horizon(tau));
        let traj = py
            .detach(|| ddesim::simulate(&self.inner, tau, &phi, horizon, step))
            .map_err(py_err)?;
        let out = PyDict::new(py);
        out.set_item("t", traj.times)?;
        out.set_item("x", traj.states)?;
        out.set_item("h", traj.h)?;
        out.set_item("diverged", traj.diverged)?;
        Ok(out.into_any())
    }

    /// Decay reports for each delay, using the given certificate.
    #[pyo3(signature = (p, q, taus, horizon = None, step = DEFAULT_STEP))]
    fn decay_check<'py>(
        &self,
        py: Python<'py>,
        p: Vec<f64>,
        q: Vec<f64>,
        taus: Vec<f64>,
        horizon: Option<f64>,
        step: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let cert = RiccatiCertificate::certify(&self.inner, DiagonalMatrix::new(p), DiagonalMatrix::new(q))
            .map_err(py_err)?;
        let reports = py
            .detach(|| ddesim::decay_check(&self.inner, &cert, &taus, horizon, step))
            .map_err(py_err)?;
        to_py(py, &reports)
    }

    fn __repr__(&self) -> String {
        format!("MatrixPair(A={:?}, B={:?})", self.a(), self.b())
    }
}

/// `(status, abscissa)` with status one of `Hurwitz`, `NotHurwitz`, `Marginal`.
#[pyfunction]
fn is_hurwitz(m: Vec<Vec<f64>>) -> PyResult<(String, f64)> {
    let r = matcore::is_hurwitz(&matrix(m)?).map_err(py_err)?;
    Ok((format!("{:?}", r.status), r.abscissa))
}

#[pyfunction]
fn is_p_matrix<'py>(py: Python<'py>, m: Vec<Vec<f64>>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &pmatrix::is_p_matrix(&matrix(m)?).map_err(py_err)?)
}

#[pyfunction]
fn lag_bound(c: f64, d: f64) -> PyResult<f64> {
    bound(c, d).map_err(py_err)
}

#[pymodule]
fn diagstab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<MatrixPair>()?;
    m.add_function(wrap_pyfunction!(is_hurwitz, m)?)?;
    m.add_function(wrap_pyfunction!(is_p_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(lag_bound, m)?)?;
    Ok(())
}
