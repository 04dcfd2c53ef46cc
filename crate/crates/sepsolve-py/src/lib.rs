//! Python bindings for the sepsolve solvers.
//!
//! The module exposes instance construction (EV generation or JSON), the
//! dual function, the three solvers at a given oracle budget, and the dual
//! bracket, mirroring the CLI surface. Build with
//! `cargo build -p sepsolve-py --release` and rename the produced
//! `libsepsolve_py.so` to `sepsolve_py.so` on the Python path (or use
//! maturin).

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sepsolve::agents::EvInstanceConfig;
use sepsolve::experiment::{iters_for_budget, run_single, Algo, ScheduleKind};
use sepsolve::problem::DualVector;
use sepsolve::serial::InstanceSpec;
use sepsolve::two_stage::Mode;

fn to_py_err(e: sepsolve::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_algo(name: &str) -> PyResult<Algo> {
    name.parse().map_err(PyValueError::new_err)
}

fn parse_kind(name: &str) -> PyResult<ScheduleKind> {
    match name {
        "constant" => Ok(ScheduleKind::Constant),
        "diminishing" => Ok(ScheduleKind::Diminishing),
        other => Err(PyValueError::new_err(format!(
            "unknown schedule kind `{other}` (expected constant|diminishing)"
        ))),
    }
}

fn parse_mode(name: &str) -> PyResult<Mode> {
    match name {
        "convex" => Ok(Mode::Convex),
        "nonconvex" => Ok(Mode::Nonconvex),
        other => Err(PyValueError::new_err(format!(
            "unknown mode `{other}` (expected convex|nonconvex)"
        ))),
    }
}

/// A separable instance with its oracle-call counter.
#[pyclass(name = "Instance")]
struct PyInstance {
    spec: InstanceSpec,
    inner: sepsolve::Instance,
}

impl PyInstance {
    fn from_spec(spec: InstanceSpec) -> PyResult<Self> {
        let inner = spec.build().map_err(to_py_err)?;
        Ok(Self { spec, inner })
    }
}

#[pymethods]
impl PyInstance {
    #[getter]
    fn num_agents(&self) -> usize {
        self.inner.num_agents()
    }

    #[getter]
    fn num_rows(&self) -> usize {
        self.inner.num_rows()
    }

    #[getter]
    fn b(&self) -> Vec<f64> {
        self.inner.b().to_vec()
    }

    /// Conservative constant bounds `(g_tilde, h, d_squared)`.
    #[getter]
    fn bounds(&self) -> (f64, f64, f64) {
        let b = self.inner.bounds();
        (b.g_tilde, b.h, b.d_squared)
    }

    #[getter]
    fn domains_all_convex(&self) -> bool {
        self.inner.domains_all_convex()
    }

    fn oracle_calls(&self) -> u64 {
        self.inner.oracle_calls()
    }

    fn reset_oracle_calls(&self) {
        self.inner.reset_oracle_calls()
    }

    /// One counted oracle call on agent `i`: minimize
    /// `gamma*cost + lambda . coupling`; returns `(point, cost, coupling)`.
    fn oracle(&self, i: usize, gamma: f64, lambda: Vec<f64>) -> PyResult<(Vec<f64>, f64, Vec<f64>)> {
        if i >= self.inner.num_agents() {
            return Err(PyValueError::new_err(format!("agent index {i} out of range")));
        }
        let atom = self
            .inner
            .oracle(i, &sepsolve::OracleQuery::new(gamma, lambda))
            .map_err(to_py_err)?;
        Ok((atom.point, atom.cost, atom.coupling))
    }

    /// Dual function at `lambda >= 0`: returns `(value, subgradient)` and
    /// spends one oracle call per agent.
    fn dual_value(&self, lambda: Vec<f64>) -> PyResult<(f64, Vec<f64>)> {
        let lambda = DualVector::new(lambda).map_err(to_py_err)?;
        let eval = sepsolve::dual_value(&self.inner, &lambda).map_err(to_py_err)?;
        Ok((eval.value, eval.subgradient))
    }

    fn to_json(&self) -> String {
        self.spec.to_json()
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(n={}, m={}, g_tilde={:.4})",
            self.inner.num_agents(),
            self.inner.num_rows(),
            self.inner.bounds().g_tilde
        )
    }
}

/// Generate an electric-vehicle charging instance.
///
/// `config_json` holds the generation parameters, at minimum
/// `{"n_agents": ..., "m": ..., "seed": ...}`.
#[pyfunction]
fn generate_ev_instance(config_json: &str) -> PyResult<PyInstance> {
    let config: EvInstanceConfig =
        serde_json::from_str(config_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let spec = sepsolve::agents::ev::generate_ev_spec(&config).map_err(to_py_err)?;
    PyInstance::from_spec(spec)
}

/// Load an instance from its JSON document.
#[pyfunction]
fn load_instance(json: &str) -> PyResult<PyInstance> {
    PyInstance::from_spec(InstanceSpec::from_json(json).map_err(to_py_err)?)
}

/// Euclidean norm of the component-wise positive part.
#[pyfunction]
fn plus_norm(v: Vec<f64>) -> f64 {
    sepsolve::plus_norm(&v)
}

/// Component-wise projection onto the nonnegative orthant.
#[pyfunction]
fn project_nonneg(v: Vec<f64>) -> Vec<f64> {
    sepsolve::project_nonneg(&v)
}

/// Bracket the dual optimum of a tiny instance (m <= 3) by grid search;
/// returns `(d_star_low, d_star_high, lambda_star_candidate)`.
#[pyfunction]
fn bracket_dual_optimum(
    instance: &PyInstance,
    delta: f64,
    radius: f64,
) -> PyResult<(f64, f64, Vec<f64>)> {
    let reference =
        sepsolve::bracket::bracket_dual_optimum(&instance.inner, delta, radius).map_err(to_py_err)?;
    Ok((
        reference.d_star_low,
        reference.d_star_high,
        reference.lambda_star_candidate.entries().to_vec(),
    ))
}

/// Run one algorithm (`"dsg"`, `"ssg"` or `"two-stage"`) at an oracle-call
/// budget and return a result dict.
#[pyfunction]
#[pyo3(signature = (instance, algo, budget, lambda_big=1.0, schedule="diminishing",
                    seed=0, mode="nonconvex", d_ref=None, trace_stride=100))]
#[allow(clippy::too_many_arguments)]
fn solve<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    algo: &str,
    budget: u64,
    lambda_big: f64,
    schedule: &str,
    seed: u64,
    mode: &str,
    d_ref: Option<f64>,
    trace_stride: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let algo = parse_algo(algo)?;
    let kind = parse_kind(schedule)?;
    let mode = parse_mode(mode)?;
    let g_tilde = instance.inner.bounds().g_tilde;
    let sched = kind.build(lambda_big, g_tilde);
    let d_ref = match d_ref {
        Some(v) => v,
        None => sepsolve::experiment::reference_best_dual(&instance.inner, budget, sched)
            .map_err(to_py_err)?,
    };
    let output = run_single(
        &instance.inner,
        algo,
        budget,
        sched,
        seed,
        trace_stride.max(1),
        mode,
        d_ref,
    )
    .map_err(to_py_err)?;

    let out = PyDict::new(py);
    out.set_item("algo", algo.to_string())?;
    out.set_item("seed", seed)?;
    out.set_item("budget", budget)?;
    out.set_item("d_ref", d_ref)?;
    out.set_item("gap_plus", output.gap_plus)?;
    out.set_item("infeasibility", output.infeasibility)?;
    out.set_item("metric", output.metric)?;
    out.set_item("primal_metric", output.primal_metric)?;
    out.set_item("total_calls", output.total_calls)?;
    out.set_item("trace_csv", output.trace.to_csv())?;
    Ok(out)
}

/// Iteration count that spends a call budget for the given algorithm.
#[pyfunction]
fn iters_for(algo: &str, budget: u64, n_agents: u64) -> PyResult<u64> {
    iters_for_budget(parse_algo(algo)?, budget, n_agents).map_err(to_py_err)
}

#[pymodule]
fn sepsolve_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_function(wrap_pyfunction!(generate_ev_instance, m)?)?;
    m.add_function(wrap_pyfunction!(load_instance, m)?)?;
    m.add_function(wrap_pyfunction!(plus_norm, m)?)?;
    m.add_function(wrap_pyfunction!(project_nonneg, m)?)?;
    m.add_function(wrap_pyfunction!(bracket_dual_optimum, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(iters_for, m)?)?;
    Ok(())
}
