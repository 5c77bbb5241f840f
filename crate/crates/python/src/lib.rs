//! Python bindings. Reports come back as plain dicts and lists (the JSON
//! forms produced by the core crate).

use std::path::PathBuf;

use irsp_core::commands::{self, Format};
use irsp_core::config::{parse_config, ExperimentConfig};
use irsp_core::dynamics::{simulate_stream, InteractionSystem, SimulationOptions, StepSchedule};
use irsp_core::graph::validate_matrix;
use irsp_core::harness::{run_ensemble, verify_against_prediction, Thresholds};
use irsp_core::spectral::Attitude;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn err(e: irsp_core::Error) -> PyErr {
    match e {
        irsp_core::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn config(text: &str, runs: Option<usize>, steps: Option<u64>, seed: Option<u64>) -> PyResult<ExperimentConfig> {
    let mut cfg = parse_config(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
    if let Some(r) = runs {
        cfg.n_runs = r;
    }
    if let Some(s) = steps {
        cfg.n_steps = s;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn system(rows: Vec<Vec<f64>>, attitude: &str) -> PyResult<InteractionSystem> {
    let attitude: Attitude = attitude.parse().map_err(PyValueError::new_err)?;
    let a = validate_matrix(&rows).map_err(err)?;
    InteractionSystem::uniform(a, attitude).map_err(err)
}

/// Parses and validates a config, returning its canonical text.
#[pyfunction]
fn canonical_config(text: &str) -> PyResult<String> {
    Ok(config(text, None, None, None)?.to_text())
}

/// Structure report for a config: classes, levels, drift diagnostics, predictions.
#[pyfunction]
fn analyze<'py>(py: Python<'py>, config_text: &str) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &commands::cmd_analyze(&config(config_text, None, None, None)?).map_err(err)?)
}

/// Structure report for a matrix with one global attitude.
#[pyfunction]
#[pyo3(signature = (rows, attitude = "competitive"))]
fn analyze_matrix<'py>(py: Python<'py>, rows: Vec<Vec<f64>>, attitude: &str) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &irsp_core::analyze(&system(rows, attitude)?).map_err(err)?)
}

/// Forced and hierarchical limit solves.
#[pyfunction]
fn limits<'py>(py: Python<'py>, config_text: &str) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &commands::cmd_limits(&config(config_text, None, None, None)?).map_err(err)?)
}

/// One run of a matrix with one global attitude under the urn schedule.
#[pyfunction]
#[pyo3(signature = (rows, attitude = "competitive", steps = 10_000, seed = 0, stream = 0, m = 1))]
fn simulate<'py>(
    py: Python<'py>,
    rows: Vec<Vec<f64>>,
    attitude: &str,
    steps: u64,
    seed: u64,
    stream: u64,
    m: u32,
) -> PyResult<Bound<'py, PyAny>> {
    let sys = system(rows, attitude)?;
    let schedule = StepSchedule::urn(m).map_err(err)?;
    let t = py
        .detach(|| simulate_stream(&sys, &schedule, seed, stream, &SimulationOptions::new(steps)))
        .map_err(err)?;
    to_py(py, &t)
}

/// Ensemble final states of a matrix with one global attitude.
#[pyfunction]
#[pyo3(signature = (rows, attitude = "competitive", runs = 50, steps = 200_000, seed = 0))]
fn ensemble<'py>(
    py: Python<'py>,
    rows: Vec<Vec<f64>>,
    attitude: &str,
    runs: usize,
    steps: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let sys = system(rows, attitude)?;
    let (stats, report) = py
        .detach(|| {
            let stats = run_ensemble(&sys, &StepSchedule::default(), seed, runs, steps)?;
            let report = verify_against_prediction(&stats, &stats.analysis.predictions(), &Thresholds::default())?;
            Ok::<_, irsp_core::Error>((stats, report))
        })
        .map_err(err)?;
    let out = serde_json::json!({
        "finals": stats.finals,
        "mean": stats.mean,
        "variance": stats.variance,
        "report": report,
    });
    to_py(py, &out)
}

/// Runs `verify` for a config; writes report files when `out` is given.
#[pyfunction]
#[pyo3(signature = (config_text, runs = None, steps = None, seed = None, out = None))]
fn verify<'py>(
    py: Python<'py>,
    config_text: &str,
    runs: Option<usize>,
    steps: Option<u64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = config(config_text, runs, steps, seed)?;
    let outcome = py.detach(|| commands::cmd_verify(&cfg, out.as_deref(), Format::Csv)).map_err(err)?;
    to_py(py, &outcome.report)
}

#[pymodule]
fn irsp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(canonical_config, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(analyze_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(limits, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
