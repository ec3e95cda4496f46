//! Python bindings: load programs, run the prover, validate certificates.

use std::time::Duration;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use nonterm::cert::{parse_certificate, write_certificate, Certificate as CoreCertificate};
use nonterm::certcheck::{validate_certificate, ValidateOptions};
use nonterm::encode::TemplateParams;
use nonterm::prove::{grid, load_system, prove as core_prove, Answer, Mode, ProveOptions};
use nonterm::solve::SolverConfig;
use nonterm::tsys::{write_tsys, Assertion, TransitionSystem as CoreSystem};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(module = "nonterm_py", frozen)]
struct TransitionSystem {
    inner: CoreSystem,
}

#[pymethods]
impl TransitionSystem {
    /// Parses program text, or a transition system in s-expression form.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(TransitionSystem { inner: load_system(text).map_err(value_err)? })
    }

    #[getter]
    fn variables(&self) -> Vec<String> {
        self.inner.vars.clone()
    }

    #[getter]
    fn locations(&self) -> Vec<String> {
        self.inner.locations.clone()
    }

    #[getter]
    fn n_transitions(&self) -> usize {
        self.inner.transitions.len()
    }

    /// The reversed system, started from every valuation at the terminal location.
    fn reverse(&self) -> Self {
        TransitionSystem { inner: self.inner.reverse(&Assertion::top()) }
    }

    fn to_text(&self) -> String {
        write_tsys(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "TransitionSystem(vars={:?}, locations={}, transitions={})",
            self.inner.vars,
            self.inner.locations.len(),
            self.inner.transitions.len()
        )
    }
}

#[pyclass(module = "nonterm_py", frozen)]
struct Certificate {
    inner: CoreCertificate,
}

#[pymethods]
impl Certificate {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Certificate { inner: parse_certificate(text).map_err(value_err)? })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind.name()
    }

    #[getter]
    fn system(&self) -> TransitionSystem {
        TransitionSystem { inner: self.inner.system.clone() }
    }

    /// Returns `(ok, report)`.
    #[pyo3(signature = (lo=-5, hi=110))]
    fn validate(&self, lo: i128, hi: i128) -> (bool, String) {
        let v = validate_certificate(&self.inner, &ValidateOptions { lo, hi, ..ValidateOptions::default() });
        (v.ok(), v.to_string())
    }

    fn to_text(&self) -> String {
        write_certificate(&self.inner)
    }
}

#[pyclass(module = "nonterm_py", frozen, get_all)]
struct ProveResult {
    answer: String,
    /// `check (c,d,D)` of the proving attempt.
    proved_by: Option<String>,
    attempts: usize,
    seconds: f64,
    certificate: Option<Py<Certificate>>,
}

#[pymethods]
impl ProveResult {
    fn __repr__(&self) -> String {
        let by = self.proved_by.as_ref().map_or("None".to_string(), |s| format!("{s:?}"));
        format!("ProveResult(answer={:?}, proved_by={by}, attempts={})", self.answer, self.attempts)
    }
}

/// Runs the prover. Without `c`, `d` and `D` the default grid is swept.
#[pyfunction]
#[pyo3(signature = (system, check="both", c=None, d=None, D=None, timeout=60))]
#[allow(non_snake_case)]
fn prove(
    py: Python<'_>,
    system: &TransitionSystem,
    check: &str,
    c: Option<usize>,
    d: Option<usize>,
    D: Option<u32>,
    timeout: u64,
) -> PyResult<ProveResult> {
    let mode = match check {
        "1" | "check1" => Mode::Check1,
        "2" | "check2" => Mode::Check2,
        "mod" | "modified" => Mode::Modified,
        "both" => Mode::Both,
        other => return Err(PyValueError::new_err(format!("unknown check `{other}`"))),
    };
    let fixed = c.is_some() || d.is_some() || D.is_some();
    let params = if fixed {
        vec![TemplateParams::new(c.unwrap_or(1), d.unwrap_or(1), D.unwrap_or(0)).map_err(value_err)?]
    } else {
        grid(3, 2, 2)
    };
    let opts = ProveOptions {
        mode,
        grid: params,
        solver: SolverConfig { timeout: Duration::from_secs(timeout), ..SolverConfig::default() },
        shape_search: fixed,
        ..ProveOptions::default()
    };
    let ts = system.inner.clone();
    let report = py.detach(|| core_prove(&ts, &opts));
    let certificate = match report.certificate() {
        Some(c) => Some(Py::new(py, Certificate { inner: c.clone() })?),
        None => None,
    };
    Ok(ProveResult {
        answer: if report.answer == Answer::No { "NO".into() } else { "MAYBE".into() },
        proved_by: report.proving_attempt().map(|a| format!("{} ({},{},{})", a.check, a.c, a.d, a.deg)),
        attempts: report.attempts.len(),
        seconds: report.seconds,
        certificate,
    })
}

#[pymodule]
fn nonterm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<TransitionSystem>()?;
    m.add_class::<Certificate>()?;
    m.add_class::<ProveResult>()?;
    m.add_function(wrap_pyfunction!(prove, m)?)?;
    Ok(())
}
