//! Python bindings. Results come back as plain dicts and lists.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyList, PyString};
use serde::Serialize;
use serde_json::{json, Value};

use pradial_core::asymptotics;
use pradial_core::error::Error;
use pradial_core::flow;
use pradial_core::params::{self, RawParams};
use pradial_core::picard as fixed_point;
use pradial_core::radial::{self, IntegrationConfig};

create_exception!(pradial, PradialError, PyException, "Solver or parameter error; args are (kind, message).");

fn to_py_err(e: Error) -> PyErr {
    PradialError::new_err((e.kind(), e.to_string()))
}

fn value_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => PyString::new(py, s).into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for x in items {
                list.append(value_to_py(py, x)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, x) in map {
                dict.set_item(k, value_to_py(py, x)?)?;
            }
            dict.into_any()
        }
    })
}

fn to_py<'py, T: Serialize>(py: Python<'py>, x: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(x).map_err(|e| PradialError::new_err(("Io", e.to_string())))?;
    value_to_py(py, &v)
}

/// Validated parameters `(N, p, m, q, alpha, beta)`.
#[pyclass(name = "SystemParams", frozen, module = "pradial", skip_from_py_object)]
#[derive(Clone, Copy)]
pub struct PySystemParams(params::SystemParams);

#[pymethods]
impl PySystemParams {
    #[new]
    #[pyo3(signature = (n, p, m, q, alpha, beta))]
    fn new(n: u32, p: f64, m: f64, q: f64, alpha: f64, beta: f64) -> PyResult<Self> {
        params::SystemParams::new(n, p, m, q, alpha, beta)
            .map(PySystemParams)
            .map_err(to_py_err)
    }

    #[getter(N)]
    fn n(&self) -> u32 {
        self.0.n()
    }
    #[getter]
    fn p(&self) -> f64 {
        self.0.p()
    }
    #[getter]
    fn m(&self) -> f64 {
        self.0.m()
    }
    #[getter]
    fn q(&self) -> f64 {
        self.0.q()
    }
    #[getter]
    fn alpha(&self) -> f64 {
        self.0.alpha()
    }
    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta()
    }
    #[getter]
    fn delta(&self) -> f64 {
        self.0.delta()
    }

    fn __repr__(&self) -> String {
        let r = self.0.raw();
        format!(
            "SystemParams(N={}, p={}, m={}, q={}, alpha={}, beta={})",
            r.n, r.p, r.m, r.q, r.alpha, r.beta
        )
    }
}

/// Regime of a raw tuple; degenerate δ gives the tag `InvalidDelta`.
#[pyfunction]
#[pyo3(signature = (n, p, m, q, alpha, beta))]
fn classify(py: Python<'_>, n: u32, p: f64, m: f64, q: f64, alpha: f64, beta: f64) -> PyResult<Bound<'_, PyAny>> {
    let regime = params::classify_raw(RawParams { n, p, m, q, alpha, beta }).map_err(to_py_err)?;
    to_py(py, &regime)
}

#[pyfunction]
fn derive<'py>(py: Python<'py>, params: &PySystemParams) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &params::derive(&params.0))
}

fn config(r0: f64, r_max: f64, rtol: f64, atol: f64, cap: f64, per_decade: usize) -> IntegrationConfig {
    IntegrationConfig {
        r0,
        r_max,
        rtol,
        atol,
        blowup_cap: cap,
        grid: radial::SampleGrid::LogUniform { per_decade },
        ..IntegrationConfig::default()
    }
}

/// Radial solution with `u(0) = a`, `v(0) = b`, sampled log-uniformly.
#[pyfunction]
#[pyo3(signature = (params, a=1.0, b=1.0, r0=1e-6, r_max=1e6, rtol=1e-10, atol=1e-12, cap=1e10, per_decade=100))]
#[allow(clippy::too_many_arguments)]
fn integrate<'py>(
    py: Python<'py>,
    params: &PySystemParams,
    a: f64,
    b: f64,
    r0: f64,
    r_max: f64,
    rtol: f64,
    atol: f64,
    cap: f64,
    per_decade: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let p = params.0;
    let cfg = config(r0, r_max, rtol, atol, cap, per_decade);
    let traj = py
        .detach(|| radial::integrate_trajectory(&p, a, b, &cfg))
        .map_err(to_py_err)?;
    let col = |f: &dyn Fn(&radial::RadialState) -> f64| traj.samples.iter().map(f).collect::<Vec<f64>>();
    let out = json!({
        "r": col(&|s| s.r),
        "u": col(&|s| s.u),
        "uprime": col(&|s| s.uprime(&p)),
        "v": col(&|s| s.v),
        "vprime": col(&|s| s.vprime(&p)),
        "stop": traj.stop,
        "r_est": traj.r_est,
        "accepted_steps": traj.accepted_steps,
    });
    value_to_py(py, &out)
}

#[pyfunction]
fn equilibrium<'py>(py: Python<'py>, params: &PySystemParams) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &flow::equilibrium(&params.0).map_err(to_py_err)?)
}

#[pyfunction]
fn stability<'py>(py: Python<'py>, params: &PySystemParams) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &flow::stability(&params.0).map_err(to_py_err)?)
}

/// Fixed point on `[0, rho]` and its sup-norm distance to the ODE solution.
#[pyfunction]
#[pyo3(signature = (params, a=1.0, b=1.0, rho=0.1, tol=1e-10, nodes=1024))]
fn picard<'py>(
    py: Python<'py>,
    params: &PySystemParams,
    a: f64,
    b: f64,
    rho: f64,
    tol: f64,
    nodes: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let p = params.0;
    let opts = fixed_point::PicardOptions {
        nodes,
        ..Default::default()
    };
    let (fp, cmp) = py
        .detach(|| {
            let fp = fixed_point::solve_fixed_point(&p, a, b, rho, tol, &opts)?;
            let cmp = fixed_point::compare_with_ode(&p, a, b, &fp, &IntegrationConfig::default())?;
            Ok((fp, cmp))
        })
        .map_err(to_py_err)?;
    let out = json!({
        "r": fp.pair.nodes,
        "u": fp.pair.u_vals,
        "uprime": fp.pair.u_prime_vals,
        "v": fp.pair.v_vals,
        "iterations": fp.iterations,
        "rho": fp.pair.rho,
        "comparison": cmp,
    });
    value_to_py(py, &out)
}

/// Growth report of the global solution with `u(0) = a`, `v(0) = b`.
#[pyfunction]
#[pyo3(signature = (params, a=1.0, b=1.0, r_max=1e6))]
fn verify_growth<'py>(py: Python<'py>, params: &PySystemParams, a: f64, b: f64, r_max: f64) -> PyResult<Bound<'py, PyAny>> {
    let p = params.0;
    let report = py
        .detach(|| {
            let eq = flow::equilibrium(&p)?;
            let cfg = IntegrationConfig {
                r_max,
                ..IntegrationConfig::default()
            };
            let traj = radial::integrate(&p, a, b, &cfg)?;
            asymptotics::verify_growth(&traj, &eq)
        })
        .map_err(to_py_err)?;
    to_py(py, &report)
}

/// `Δp u = u^m |∇u|^q` through the embedded system.
#[pyfunction]
#[pyo3(signature = (n, p, m, q, a=1.0, r_max=1e6))]
fn single_eq<'py>(py: Python<'py>, n: u32, p: f64, m: f64, q: f64, a: f64, r_max: f64) -> PyResult<Bound<'py, PyAny>> {
    let run = py
        .detach(|| {
            let cfg = IntegrationConfig {
                r_max,
                ..IntegrationConfig::default()
            };
            asymptotics::single_equation_mode(n, p, m, q, a, &cfg)
        })
        .map_err(to_py_err)?;
    to_py(py, &run.report)
}

#[pymodule]
fn pradial(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("PradialError", m.py().get_type::<PradialError>())?;
    m.add_class::<PySystemParams>()?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(derive, m)?)?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(equilibrium, m)?)?;
    m.add_function(wrap_pyfunction!(stability, m)?)?;
    m.add_function(wrap_pyfunction!(picard, m)?)?;
    m.add_function(wrap_pyfunction!(verify_growth, m)?)?;
    m.add_function(wrap_pyfunction!(single_eq, m)?)?;
    Ok(())
}
