//! Python bindings: parse classes, select goals, run searches, compare samples.

use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;

use covgen_core::goals::GoalEvaluator;
use covgen_core::harness::{cell_seed as core_cell_seed, generate_corpus as core_generate_corpus, CorpusSpec};
use covgen_core::lang::{self, pretty_print, SourceUnit};
use covgen_core::mutation::SubsumptionTable;
use covgen_core::search::{run_search, Algorithm, SearchConfig};
use covgen_core::selection::{goal_set as core_goal_set, Mode, SelectionConfig, DEFAULT_LINE_THRESHOLD};
use covgen_core::stats;

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl ToString) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Hands a serde value to Python as plain dicts and lists.
fn to_py<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(runtime_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A parsed and checked MiniLang class.
#[pyclass(frozen, module = "pycovgen")]
struct Unit {
    inner: Arc<SourceUnit>,
}

#[pymethods]
impl Unit {
    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn branches(&self) -> usize {
        lang::count_branches(&self.inner)
    }

    #[getter]
    fn lines(&self) -> usize {
        self.inner.line_count()
    }

    fn pretty(&self) -> String {
        pretty_print(&self.inner.class)
    }

    fn __repr__(&self) -> String {
        format!("Unit({}, branches={})", self.inner.name, lang::count_branches(&self.inner))
    }
}

#[pyfunction]
fn parse(source: &str) -> PyResult<Unit> {
    lang::parse(source).map(|u| Unit { inner: Arc::new(u) }).map_err(value_err)
}

fn selection(unit: &Unit, mode: &str, line_threshold: usize) -> PyResult<(Mode, covgen_core::selection::GoalSelection)> {
    let mode: Mode = mode.parse().map_err(value_err)?;
    let cfg = SelectionConfig { mode, line_threshold, ..SelectionConfig::default() };
    let sel = core_goal_set(&unit.inner, &cfg, &SubsumptionTable::builtin()).map_err(value_err)?;
    Ok((mode, sel))
}

/// Goal set dump for `mode` ("smart", "original" or "single:<criterion>").
#[pyfunction]
#[pyo3(signature = (unit, mode = "smart", line_threshold = DEFAULT_LINE_THRESHOLD))]
fn goal_set<'py>(py: Python<'py>, unit: &Unit, mode: &str, line_threshold: usize) -> PyResult<Bound<'py, PyAny>> {
    let (mode, sel) = selection(unit, mode, line_threshold)?;
    to_py(py, &sel.dump(&unit.inner, mode, line_threshold))
}

/// Runs one search and returns its coverage report, suite and event log.
#[pyfunction]
#[pyo3(signature = (unit, mode = "smart", algorithm = "WS", budget = 30_000, seed = 0, line_threshold = DEFAULT_LINE_THRESHOLD))]
fn search<'py>(
    py: Python<'py>,
    unit: &Unit,
    mode: &str,
    algorithm: &str,
    budget: u64,
    seed: u64,
    line_threshold: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let (_, sel) = selection(unit, mode, line_threshold)?;
    let algorithm: Algorithm = algorithm.parse().map_err(value_err)?;
    let ev = GoalEvaluator::new(unit.inner.clone(), sel.goals, &sel.mutants).map_err(runtime_err)?;
    let cfg = SearchConfig { algorithm, max_evaluations: budget, seed, ..SearchConfig::default() };
    let r = py.detach(|| run_search(&ev, &cfg)).map_err(runtime_err)?;
    let tests: Vec<String> = r.suite.tests.iter().map(|t| t.render(&unit.inner)).collect();
    let out = pyo3::types::PyDict::new(py);
    out.set_item("report", to_py(py, &r.report)?)?;
    out.set_item("tests", tests)?;
    out.set_item("goals", ev.len())?;
    out.set_item("covered", r.covered.len())?;
    out.set_item("evaluations", r.evaluations)?;
    out.set_item("events", to_py(py, &r.events)?)?;
    Ok(out.into_any())
}

/// Synthetic corpus as a list of (class name, source) pairs.
#[pyfunction]
#[pyo3(signature = (seed = 0, small = 30, big = 10))]
fn generate_corpus(seed: u64, small: usize, big: usize) -> PyResult<Vec<(String, String)>> {
    let spec = CorpusSpec { small_classes: small, big_classes: big, ..CorpusSpec::default() };
    let classes = core_generate_corpus(&spec, seed).map_err(value_err)?;
    Ok(classes.into_iter().map(|c| (c.name, c.source)).collect())
}

#[pyfunction]
fn cell_seed(base: u64, class: &str, mode: &str, round: u32) -> PyResult<u64> {
    Ok(core_cell_seed(base, class, mode.parse::<Mode>().map_err(value_err)?, round))
}

/// (U, p, method) for the first sample; exact for samples of at most 8.
#[pyfunction]
fn mann_whitney_u(a: Vec<f64>, b: Vec<f64>) -> PyResult<(f64, f64, String)> {
    let t = stats::mann_whitney_u(&a, &b).map_err(value_err)?;
    Ok((t.u, t.p, t.method.to_string()))
}

#[pyfunction]
fn vargha_delaney_a12(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    stats::vargha_delaney_a12(&a, &b).map_err(value_err)
}

#[pymodule]
fn pycovgen(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Unit>()?;
    m.add_function(wrap_pyfunction!(parse, m)?)?;
    m.add_function(wrap_pyfunction!(goal_set, m)?)?;
    m.add_function(wrap_pyfunction!(search, m)?)?;
    m.add_function(wrap_pyfunction!(generate_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(cell_seed, m)?)?;
    m.add_function(wrap_pyfunction!(mann_whitney_u, m)?)?;
    m.add_function(wrap_pyfunction!(vargha_delaney_a12, m)?)?;
    Ok(())
}
