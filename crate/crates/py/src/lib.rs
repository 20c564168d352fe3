//! Python bindings: check programs, inspect inferred shapes and the
//! generated constraints.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

use liquid_mini::driver::{self, Options, Verdict};
use liquid_mini::front::{self, lower};
use liquid_mini::logic::smt::SmtOracle;
use liquid_mini::logic::Cached;
use liquid_mini::solver;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

#[pyclass(name = "Diagnostic", get_all, frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDiagnostic {
    path: String,
    line: u32,
    col: u32,
    end_line: u32,
    end_col: u32,
    message: String,
    implication: String,
    model: Option<BTreeMap<String, String>>,
    types: Vec<String>,
    text: String,
}

#[pymethods]
impl PyDiagnostic {
    fn render(&self) -> String {
        self.text.clone()
    }

    fn __repr__(&self) -> String {
        format!("Diagnostic({}:{}:{}: {})", self.path, self.line, self.col, self.message)
    }
}

impl From<&driver::Diagnostic> for PyDiagnostic {
    fn from(d: &driver::Diagnostic) -> Self {
        PyDiagnostic {
            path: d.path.clone(),
            line: d.span.start.line,
            col: d.span.start.col,
            end_line: d.span.end.line,
            end_col: d.span.end.col,
            message: d.message.clone(),
            implication: d.implication.clone(),
            model: d.model.clone(),
            types: d.types.clone(),
            text: d.render(),
        }
    }
}

/// Outcome of checking one program. `verdict` is "SAFE", "UNSAFE" or
/// "ERROR".
#[pyclass(name = "Report", get_all, frozen)]
struct PyReport {
    path: String,
    verdict: String,
    exit_code: i32,
    diagnostics: Vec<PyDiagnostic>,
    error: Option<String>,
    dumps: String,
    text: String,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn safe(&self) -> bool {
        self.verdict == "SAFE"
    }

    fn render(&self) -> String {
        self.text.clone()
    }

    fn __repr__(&self) -> String {
        format!("Report({}, {}, {} diagnostics)", self.path, self.verdict, self.diagnostics.len())
    }
}

impl From<driver::FileReport> for PyReport {
    fn from(r: driver::FileReport) -> Self {
        let text = r.render();
        let (verdict, diagnostics, error) = match &r.verdict {
            Verdict::Safe => ("SAFE", vec![], None),
            Verdict::Unsafe(ds) => ("UNSAFE", ds.iter().map(PyDiagnostic::from).collect(), None),
            Verdict::ToolError(m) => ("ERROR", vec![], Some(m.clone())),
        };
        PyReport {
            path: r.path,
            verdict: verdict.into(),
            exit_code: r.verdict.exit_code(),
            diagnostics,
            error,
            dumps: r.dumps,
            text,
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn options(
    timeout: f64,
    solver: Option<PathBuf>,
    qualifiers: Option<PathBuf>,
    dump_constraints: bool,
    dump_solution: bool,
    dump_shapes: bool,
    jobs: usize,
) -> PyResult<Options> {
    if timeout.is_nan() || timeout <= 0.0 {
        return Err(PyValueError::new_err("timeout must be positive"));
    }
    Ok(Options {
        solver,
        qualifiers,
        dump_constraints,
        dump_solution,
        dump_shapes,
        timeout: Duration::from_secs_f64(timeout),
        jobs: jobs.max(1),
        ..Options::default()
    })
}

/// Check a program given as text.
#[pyfunction]
#[pyo3(signature = (text, path = "<input>", timeout = 10.0, solver = None, qualifiers = None,
                    dump_constraints = false, dump_solution = false, dump_shapes = false))]
#[allow(clippy::too_many_arguments)]
fn check_source(
    py: Python<'_>,
    text: &str,
    path: &str,
    timeout: f64,
    solver: Option<PathBuf>,
    qualifiers: Option<PathBuf>,
    dump_constraints: bool,
    dump_solution: bool,
    dump_shapes: bool,
) -> PyResult<PyReport> {
    let opts = options(timeout, solver, qualifiers, dump_constraints, dump_solution, dump_shapes, 1)?;
    py.detach(|| {
        let cfg = driver::solver_config(&opts).map_err(PyRuntimeError::new_err)?;
        let mut oracle = Cached::new(SmtOracle::new(cfg).map_err(|e| PyRuntimeError::new_err(e.to_string()))?);
        Ok(driver::check_source(path, text, &opts, &mut oracle).into())
    })
}

/// Check files, in parallel when `jobs` > 1. Reports come back in input
/// order.
#[pyfunction]
#[pyo3(signature = (paths, timeout = 10.0, solver = None, qualifiers = None,
                    dump_constraints = false, dump_solution = false, dump_shapes = false, jobs = 1))]
#[allow(clippy::too_many_arguments)]
fn check_files(
    py: Python<'_>,
    paths: Vec<String>,
    timeout: f64,
    solver: Option<PathBuf>,
    qualifiers: Option<PathBuf>,
    dump_constraints: bool,
    dump_solution: bool,
    dump_shapes: bool,
    jobs: usize,
) -> PyResult<Vec<PyReport>> {
    let opts = options(timeout, solver, qualifiers, dump_constraints, dump_solution, dump_shapes, jobs)?;
    Ok(py.detach(|| driver::check_files(&paths, &opts)).into_iter().map(PyReport::from).collect())
}

fn front_end(text: &str, path: &str) -> PyResult<driver::Checked> {
    driver::front_end(path, text).map_err(|e| PyValueError::new_err(format!("{path}:{}: {}", e.span, e.message)))
}

/// Inferred type schemes of the program's bindings, by name.
#[pyfunction]
#[pyo3(signature = (text, path = "<input>"))]
fn infer_shapes(text: &str, path: &str) -> PyResult<BTreeMap<String, String>> {
    let ck = front_end(text, path)?;
    Ok(ck.prog.binds.iter().map(|b| (b.name.to_string(), ck.shapes.globals[b.name.as_str()].to_string())).collect())
}

/// Subtyping constraints as printed by `--dump-constraints`.
#[pyfunction]
#[pyo3(signature = (text, path = "<input>"))]
fn constraints(text: &str, path: &str) -> PyResult<Vec<String>> {
    let ck = front_end(text, path)?;
    Ok(ck.constraints.dump(path).lines().map(str::to_string).collect())
}

/// The qualifiers harvested from a program's annotations.
#[pyfunction]
#[pyo3(signature = (text, path = "<input>"))]
fn qualifiers(text: &str, path: &str) -> PyResult<Vec<String>> {
    let prog = front::load(path, text).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(solver::harvest_default_qualifiers(&prog).iter().map(|q| q.to_string()).collect())
}

/// Parse a qualifier in the context of a program and return its printed
/// form.
#[pyfunction]
#[pyo3(signature = (qualifier, text = ""))]
fn parse_qualifier(qualifier: &str, text: &str) -> PyResult<String> {
    let prog = front::load("<input>", text).map_err(|e| PyValueError::new_err(e.to_string()))?;
    lower::parse_qualifier(qualifier, &prog).map(|q| q.to_string()).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn liquid_mini_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDiagnostic>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(check_source, m)?)?;
    m.add_function(wrap_pyfunction!(check_files, m)?)?;
    m.add_function(wrap_pyfunction!(infer_shapes, m)?)?;
    m.add_function(wrap_pyfunction!(constraints, m)?)?;
    m.add_function(wrap_pyfunction!(qualifiers, m)?)?;
    m.add_function(wrap_pyfunction!(parse_qualifier, m)?)?;
    Ok(())
}
