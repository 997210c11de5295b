//! Python bindings. Instances and policies cross the boundary as JSON
//! strings; reports come back as Python dicts.

use mtcode::cli::{envelope, execute, Cli};
use mtcode::coordinator::solve_coordinator;
use mtcode::engine::{expected_distortion_exact, simulate_mc_with, SystemAssembly};
use mtcode::model::{validate as validate_instance, Instance};
use mtcode::oracle::{enumerate_global_optimum, verify_theorem1, SearchBudget};
use mtcode::policies::{EncoderPolicy, PolicyFile};
use mtcode::Error;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use serde_json::{json, Value};

create_exception!(mtcode_py, BudgetExceeded, PyException);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::BudgetExceeded { .. } => BudgetExceeded::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (v.to_string(),))
}

fn instance(text: &str) -> PyResult<Instance> {
    Instance::from_json_str(text).map_err(py_err)
}

fn assembly(inst: &Instance, policy: &str) -> PyResult<SystemAssembly> {
    PolicyFile::from_json_str(policy).and_then(|pf| SystemAssembly::from_policy(inst.clone(), pf)).map_err(py_err)
}

fn budget(max_strategies: u64, max_atoms: u64, workers: usize) -> SearchBudget {
    SearchBudget { max_strategies: max_strategies.into(), max_atoms: max_atoms.into(), workers: workers.max(1), ..SearchBudget::default() }
}

fn value<T: serde::Serialize>(v: &T) -> PyResult<Value> {
    serde_json::to_value(v).map_err(|e| py_err(e.into()))
}

/// Validation report for an instance: `{"ok": bool, "violations": [...]}`.
#[pyfunction]
fn validate<'py>(py: Python<'py>, instance_json: &str) -> PyResult<Bound<'py, PyAny>> {
    let inst: Instance = serde_json::from_str(instance_json).map_err(|e| py_err(e.into()))?;
    let rep = validate_instance(&inst);
    to_py(py, &json!({ "ok": rep.ok(), "violations": value(&rep.violations)? }))
}

/// SHA-256 content hash of a parsed instance.
#[pyfunction]
fn instance_hash(instance_json: &str) -> PyResult<String> {
    Ok(instance(instance_json)?.content_hash())
}

#[pyfunction]
fn exact<'py>(py: Python<'py>, instance_json: &str, policy_json: &str) -> PyResult<Bound<'py, PyAny>> {
    let inst = instance(instance_json)?;
    let asm = assembly(&inst, policy_json)?;
    let rep = py.detach(|| expected_distortion_exact(&asm)).map_err(py_err)?;
    to_py(py, &value(&rep)?)
}

#[pyfunction]
#[pyo3(signature = (instance_json, policy_json, samples = 10_000, seed = 0, workers = 1))]
fn mc<'py>(py: Python<'py>, instance_json: &str, policy_json: &str, samples: u64, seed: u64, workers: usize) -> PyResult<Bound<'py, PyAny>> {
    let inst = instance(instance_json)?;
    let asm = assembly(&inst, policy_json)?;
    let rep = py.detach(|| simulate_mc_with(&asm, samples, seed, workers.max(1))).map_err(py_err)?;
    to_py(py, &value(&rep)?)
}

/// Global optimum by exhaustive search: cost, witness cost, counts and witness policy.
#[pyfunction]
#[pyo3(signature = (instance_json, max_strategies = 10_000_000, max_atoms = 100_000_000))]
fn brute<'py>(py: Python<'py>, instance_json: &str, max_strategies: u64, max_atoms: u64) -> PyResult<Bound<'py, PyAny>> {
    let inst = instance(instance_json)?;
    let b = budget(max_strategies, max_atoms, 1);
    let opt = py.detach(|| enumerate_global_optimum(&inst, &b)).map_err(py_err)?;
    let out = json!({
        "cost": opt.cost,
        "witness_cost": opt.witness_cost,
        "counts": value(&opt.counts)?,
        "defaulted_decoder_entries": opt.defaulted_decoder_entries,
        "witness": value(&opt.witness.policy_file())?,
    });
    to_py(py, &out)
}

/// Structured-versus-global optimum comparison.
#[pyfunction]
#[pyo3(signature = (instance_json, max_strategies = 10_000_000, max_atoms = 100_000_000))]
fn verify_structure<'py>(py: Python<'py>, instance_json: &str, max_strategies: u64, max_atoms: u64) -> PyResult<Bound<'py, PyAny>> {
    let inst = instance(instance_json)?;
    let b = budget(max_strategies, max_atoms, 1);
    let rep = py.detach(|| verify_theorem1(&inst, &b)).map_err(py_err)?;
    to_py(py, &value(&rep)?)
}

/// Coordinator dynamic program for one encoder; returns the optimal value,
/// the exact cost of the extracted policy and that policy.
#[pyfunction]
#[pyo3(signature = (instance_json, policy_json, target = 0, grid = None))]
fn dp<'py>(py: Python<'py>, instance_json: &str, policy_json: &str, target: usize, grid: Option<usize>) -> PyResult<Bound<'py, PyAny>> {
    let inst = instance(instance_json)?;
    let mut asm = assembly(&inst, policy_json)?;
    if target >= asm.encoders.len() {
        return Err(PyValueError::new_err("target out of range"));
    }
    let b = SearchBudget::default();
    let sol = py.detach(|| solve_coordinator(&inst, &asm.encoders, &asm.receiver, target, &b, grid)).map_err(py_err)?;
    asm.encoders[target] = EncoderPolicy::XiStructured(sol.encoder.clone());
    let cost = py.detach(|| expected_distortion_exact(&asm)).map_err(py_err)?;
    let out = json!({
        "value": sol.values.v0,
        "exact_cost": cost.total,
        "states": sol.graph.state_count(),
        "policy": value(&asm.policy_file())?,
    });
    to_py(py, &out)
}

/// Run a command-line invocation (arguments after the program name) and
/// return the report dict it would print.
#[pyfunction]
fn run<'py>(py: Python<'py>, args: Vec<String>) -> PyResult<Bound<'py, PyAny>> {
    use clap::Parser;
    let cli = Cli::try_parse_from(std::iter::once("mtcode".to_string()).chain(args)).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let outcome = py.detach(|| execute(&cli)).map_err(py_err)?;
    to_py(py, &envelope(&outcome))
}

#[pymodule]
fn mtcode_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("BudgetExceeded", m.py().get_type::<BudgetExceeded>())?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(instance_hash, m)?)?;
    m.add_function(wrap_pyfunction!(exact, m)?)?;
    m.add_function(wrap_pyfunction!(mc, m)?)?;
    m.add_function(wrap_pyfunction!(brute, m)?)?;
    m.add_function(wrap_pyfunction!(verify_structure, m)?)?;
    m.add_function(wrap_pyfunction!(dp, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
