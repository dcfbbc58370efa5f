//! Python bindings: model symbols, kernel solves, expansion tables,
//! classification and the pseudo-spectral cross-checks.

use std::str::FromStr;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;

use asymwave_core::bifurcation::{self, DEFAULT_ZERO_THRESHOLD_FACTOR};
use asymwave_core::expansion;
use asymwave_core::models::{self, Model, ModelId};
use asymwave_core::oracle;
use asymwave_core::params::{FixedParams, Params};
use asymwave_core::spectral::SpectralGrid;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn model_from(name: &str) -> PyResult<Box<dyn Model>> {
    Ok(ModelId::from_str(name).map_err(err)?.model())
}

fn fixed_from(dict: Option<&Bound<'_, PyDict>>) -> PyResult<FixedParams> {
    let mut fixed = FixedParams::new();
    if let Some(dict) = dict {
        for (key, value) in dict.iter() {
            fixed.set(&key.extract::<String>()?, value.extract::<f64>()?);
        }
    }
    Ok(fixed)
}

fn params_from(model: &dyn Model, dict: &Bound<'_, PyDict>) -> PyResult<Params> {
    let mut values = Vec::with_capacity(model.param_names().len());
    for &name in model.param_names() {
        let item = dict
            .get_item(name)?
            .ok_or_else(|| err(format!("missing parameter `{name}`")))?;
        values.push(item.extract::<f64>()?);
    }
    Params::new(model.param_names(), values).map_err(err)
}

fn json_to_py(py: Python<'_>, value: &serde_json::Value) -> PyResult<Py<PyAny>> {
    match value {
        serde_json::Value::Null => Ok(py.None()),
        serde_json::Value::Bool(b) => b.into_py_any(py),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_py_any(py)
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_py_any(py)
            }
        }
        serde_json::Value::String(s) => s.into_py_any(py),
        serde_json::Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_py_any(py)
        }
        serde_json::Value::Object(map) => {
            let dict = PyDict::new(py);
            for (key, item) in map {
                dict.set_item(key, json_to_py(py, item)?)?;
            }
            dict.into_py_any(py)
        }
    }
}

fn to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    json_to_py(py, &serde_json::to_value(value).map_err(err)?)
}

/// Model identifiers accepted by the functions in this module.
#[pyfunction]
fn model_names() -> Vec<&'static str> {
    ModelId::ALL.iter().map(|id| id.as_str()).collect()
}

/// Parameter names of a model, in canonical order.
#[pyfunction]
fn param_names(model: &str) -> PyResult<Vec<&'static str>> {
    Ok(model_from(model)?.param_names().to_vec())
}

/// The linear Fourier symbol l_mu(k).
#[pyfunction]
fn linear_symbol(model: &str, params: &Bound<'_, PyDict>, k: i64) -> PyResult<f64> {
    let model = model_from(model)?;
    let mu = params_from(model.as_ref(), params)?;
    model.linear_symbol(&mu, k).map_err(err)
}

/// The degree-len(ks) multilinear nonlinearity symbol on the wavenumbers.
#[pyfunction]
fn nonlinear_symbol(model: &str, params: &Bound<'_, PyDict>, ks: Vec<i64>) -> PyResult<f64> {
    let model = model_from(model)?;
    let mu = params_from(model.as_ref(), params)?;
    model.nonlinear_symbol(&mu, &ks).map_err(err)
}

/// Coefficient b_{j,k} of the inverse-square-root expansion (j + 2k >= 2).
#[pyfunction]
fn b_coeff(j: u32, k: u32) -> PyResult<f64> {
    models::b_coeff(j, k).map_err(err)
}

/// Kernel parameters with l(k1) = l(k2) = 0 plus the simplicity certificate.
#[pyfunction]
#[pyo3(signature = (model, k1, k2, fixed=None))]
fn solve_kernel_params(
    py: Python<'_>,
    model: &str,
    k1: u32,
    k2: u32,
    fixed: Option<&Bound<'_, PyDict>>,
) -> PyResult<Py<PyAny>> {
    let model = model_from(model)?;
    let ks = model
        .solve_kernel_params(k1, k2, &fixed_from(fixed)?)
        .map_err(err)?;
    let dict = PyDict::new(py);
    dict.set_item("k1", ks.k1)?;
    dict.set_item("k2", ks.k2)?;
    dict.set_item("coprime", ks.coprime)?;
    dict.set_item("mu0", ks.mu0.as_map())?;
    dict.set_item("certificate", to_py(py, &ks.certificate)?)?;
    dict.into_py_any(py)
}

/// The resonance coefficient n_{(0,k1),(k2-1,0)} at the kernel point.
#[pyfunction]
#[pyo3(signature = (model, k1, k2, fixed=None))]
fn resonance_coefficient(
    model: &str,
    k1: u32,
    k2: u32,
    fixed: Option<&Bound<'_, PyDict>>,
) -> PyResult<f64> {
    let model = model_from(model)?;
    let ks = model
        .solve_kernel_params(k1, k2, &fixed_from(fixed)?)
        .map_err(err)?;
    expansion::resonance_coefficient(model.as_ref(), &ks, &ks.mu0).map_err(err)
}

/// Tension-scaled constant C(k1,k2) of the infinite-depth Whitham model:
/// returns (value, relative spread across the samples).
#[pyfunction]
fn scaled_constant(k1: u32, k2: u32, t_samples: Vec<f64>) -> PyResult<(f64, f64)> {
    let model = ModelId::WhithamInfinite.model();
    let sc = expansion::scaled_constant(model.as_ref(), k1, k2, &t_samples).map_err(err)?;
    Ok((sc.value, sc.spread))
}

/// Transversality data (Jacobian determinant or degenerate-parameters
/// marker) at the kernel point.
#[pyfunction]
#[pyo3(signature = (model, k1, k2, fixed=None))]
fn transversality(
    py: Python<'_>,
    model: &str,
    k1: u32,
    k2: u32,
    fixed: Option<&Bound<'_, PyDict>>,
) -> PyResult<Py<PyAny>> {
    let model = model_from(model)?;
    let ks = model
        .solve_kernel_params(k1, k2, &fixed_from(fixed)?)
        .map_err(err)?;
    let data = expansion::transversality_jacobian(model.as_ref(), &ks, None).map_err(err)?;
    to_py(py, &data)
}

/// Full classification of one pair; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (model, k1, k2, fixed=None, zero_threshold_factor=DEFAULT_ZERO_THRESHOLD_FACTOR))]
fn classify(
    py: Python<'_>,
    model: &str,
    k1: u32,
    k2: u32,
    fixed: Option<&Bound<'_, PyDict>>,
    zero_threshold_factor: f64,
) -> PyResult<Py<PyAny>> {
    let model = model_from(model)?;
    let report = bifurcation::classify(
        model.as_ref(),
        k1,
        k2,
        &fixed_from(fixed)?,
        zero_threshold_factor,
    )
    .map_err(err)?;
    to_py(py, &report)
}

/// Classification of all pairs up to kmax; returns a list of report dicts.
#[pyfunction]
#[pyo3(signature = (model, kmax, fixed=None, include_noncoprime=false))]
fn scan(
    py: Python<'_>,
    model: &str,
    kmax: u32,
    fixed: Option<&Bound<'_, PyDict>>,
    include_noncoprime: bool,
) -> PyResult<Py<PyAny>> {
    let model = model_from(model)?;
    let reports = bifurcation::scan_pairs(
        model.as_ref(),
        kmax,
        &fixed_from(fixed)?,
        include_noncoprime,
        DEFAULT_ZERO_THRESHOLD_FACTOR,
    )
    .map_err(err)?;
    to_py(py, &reports)
}

/// Expansion coefficients u_{alpha,gamma} up to the given order, keyed by
/// the tuple (a1, a2, g1, g2).
#[pyfunction]
#[pyo3(signature = (model, k1, k2, order, fixed=None))]
fn expansion_table(
    py: Python<'_>,
    model: &str,
    k1: u32,
    k2: u32,
    order: usize,
    fixed: Option<&Bound<'_, PyDict>>,
) -> PyResult<Py<PyAny>> {
    let model = model_from(model)?;
    let ks = model
        .solve_kernel_params(k1, k2, &fixed_from(fixed)?)
        .map_err(err)?;
    let table = expansion::build_table(model.as_ref(), &ks, &ks.mu0, order).map_err(err)?;
    let dict = PyDict::new(py);
    for o in 1..=order {
        for idx in asymwave_core::multi_index::indices_of_order(o) {
            let value = table.u_hat(&idx);
            if value != 0.0 {
                dict.set_item((idx.a1, idx.a2, idx.g1, idx.g2), value)?;
            }
        }
    }
    dict.into_py_any(py)
}

/// Mode coefficients of the truncated expansion at amplitudes r and phases
/// theta, as a dict k -> (re, im).
#[pyfunction]
#[pyo3(signature = (model, k1, k2, order, r, theta, fixed=None))]
#[allow(clippy::too_many_arguments)]
fn evaluate_expansion(
    py: Python<'_>,
    model: &str,
    k1: u32,
    k2: u32,
    order: usize,
    r: (f64, f64),
    theta: (f64, f64),
    fixed: Option<&Bound<'_, PyDict>>,
) -> PyResult<Py<PyAny>> {
    let model = model_from(model)?;
    let ks = model
        .solve_kernel_params(k1, k2, &fixed_from(fixed)?)
        .map_err(err)?;
    let table = expansion::build_table(model.as_ref(), &ks, &ks.mu0, order).map_err(err)?;
    let dict = PyDict::new(py);
    for (k, c) in table.evaluate(r, theta) {
        dict.set_item(k, (c.re, c.im))?;
    }
    dict.into_py_any(py)
}

/// Pseudo-spectral factorization estimates at a solved point: a dict with
/// psi1..psi4, the raw projections and the achieved residual.
#[pyfunction]
#[pyo3(signature = (model, k1, k2, r, theta, fixed=None, modes=None))]
#[allow(clippy::too_many_arguments)]
fn psi_estimates(
    py: Python<'_>,
    model: &str,
    k1: u32,
    k2: u32,
    r: (f64, f64),
    theta: (f64, f64),
    fixed: Option<&Bound<'_, PyDict>>,
    modes: Option<usize>,
) -> PyResult<Py<PyAny>> {
    let model = model_from(model)?;
    let ks = model
        .solve_kernel_params(k1, k2, &fixed_from(fixed)?)
        .map_err(err)?;
    let n_modes = modes.unwrap_or(8 * (k1 + k2) as usize);
    let grid = SpectralGrid::with_default_oversample(n_modes).map_err(err)?;
    let est = oracle::psi_estimates(model.as_ref(), &ks.mu0, k1, k2, r, theta, &grid)
        .map_err(err)?;
    let dict = PyDict::new(py);
    dict.set_item("psi1", est.psi1)?;
    dict.set_item("psi2", est.psi2)?;
    dict.set_item("psi3", est.psi3)?;
    dict.set_item("psi4", est.psi4)?;
    dict.set_item("proj_cos", est.proj_cos)?;
    dict.set_item("proj_sin", est.proj_sin)?;
    dict.set_item("residual_norm", est.residual_norm)?;
    dict.into_py_any(py)
}

/// Solves the complement equation and returns the mode coefficients of
/// u = v + w as a dict k -> (re, im), plus the residual history.
#[pyfunction]
#[pyo3(signature = (model, k1, k2, r, theta, fixed=None, modes=None))]
#[allow(clippy::too_many_arguments)]
fn ls_solve(
    py: Python<'_>,
    model: &str,
    k1: u32,
    k2: u32,
    r: (f64, f64),
    theta: (f64, f64),
    fixed: Option<&Bound<'_, PyDict>>,
    modes: Option<usize>,
) -> PyResult<Py<PyAny>> {
    let model = model_from(model)?;
    let ks = model
        .solve_kernel_params(k1, k2, &fixed_from(fixed)?)
        .map_err(err)?;
    let n_modes = modes.unwrap_or(8 * (k1 + k2) as usize);
    let grid = SpectralGrid::with_default_oversample(n_modes).map_err(err)?;
    let sol =
        oracle::ls_solve(model.as_ref(), &ks.mu0, k1, k2, r, theta, &grid).map_err(err)?;
    let coeffs = PyDict::new(py);
    for (k, c) in sol.modes.iter_modes() {
        if c.norm() > 0.0 {
            coeffs.set_item(k, (c.re, c.im))?;
        }
    }
    let dict = PyDict::new(py);
    dict.set_item("modes", coeffs)?;
    dict.set_item("residual_norm", sol.residual_norm)?;
    dict.set_item("residual_history", sol.residual_history)?;
    dict.into_py_any(py)
}

#[pymodule]
fn asymwave_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(model_names, m)?)?;
    m.add_function(wrap_pyfunction!(param_names, m)?)?;
    m.add_function(wrap_pyfunction!(linear_symbol, m)?)?;
    m.add_function(wrap_pyfunction!(nonlinear_symbol, m)?)?;
    m.add_function(wrap_pyfunction!(b_coeff, m)?)?;
    m.add_function(wrap_pyfunction!(solve_kernel_params, m)?)?;
    m.add_function(wrap_pyfunction!(resonance_coefficient, m)?)?;
    m.add_function(wrap_pyfunction!(scaled_constant, m)?)?;
    m.add_function(wrap_pyfunction!(transversality, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(scan, m)?)?;
    m.add_function(wrap_pyfunction!(expansion_table, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_expansion, m)?)?;
    m.add_function(wrap_pyfunction!(psi_estimates, m)?)?;
    m.add_function(wrap_pyfunction!(ls_solve, m)?)?;
    Ok(())
}
