//! Python bindings: `import perron_py`.

use std::collections::BTreeMap;

use perron_core::estimator::{
    self, choose_scaling, CtEstimatorConfig, GwEstimatorConfig, Scaling, DEFAULT_MARGIN,
};
use perron_core::evaluate::{TruncationPlan, DEFAULT_N_MAX};
use perron_core::{Error, LawKind, NonNegativeMatrix};
use pyo3::exceptions::{PyIndexError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::IndexOutOfRange { .. } => PyIndexError::new_err(e.to_string()),
        Error::NoConvergence { .. } | Error::Estimation(_) | Error::SizeCapExceeded { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Dense nonnegative square matrix.
#[pyclass(name = "Matrix", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMatrix(NonNegativeMatrix);

#[pymethods]
impl PyMatrix {
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        NonNegativeMatrix::from_rows(&rows).map(Self).map_err(py_err)
    }

    /// Reads a plain, csv or json matrix file.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        perron_core::io::read_matrix(path.as_ref(), None)
            .map(Self)
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn random_primitive(n: usize, seed: u64) -> Self {
        Self(perron_core::random_primitive(n, seed))
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.dim()
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.0.rows().map(<[f64]>::to_vec).collect()
    }

    fn __repr__(&self) -> String {
        format!("Matrix(n={})", self.0.dim())
    }
}

/// `(is_primitive, exponent, reason)`.
#[pyfunction]
fn validate_primitive(a: &PyMatrix) -> (bool, Option<usize>, Option<String>) {
    let r = perron_core::validate_primitive(&a.0);
    (r.is_primitive, r.exponent, r.reason)
}

/// `(lambda, u, residual)` with `u` normalized to sum 1.
#[pyfunction]
#[pyo3(signature = (a, tol=None, max_iter=perron_core::perron::DEFAULT_MAX_ITER))]
fn perron_pair(a: &PyMatrix, tol: Option<f64>, max_iter: usize) -> PyResult<(f64, Vec<f64>, f64)> {
    let tol = tol.unwrap_or_else(|| perron_core::perron::default_tol(&a.0));
    let p = perron_core::perron_pair(&a.0, tol, max_iter).map_err(py_err)?;
    Ok((p.lambda, p.u, p.residual))
}

#[pyfunction]
fn stationary_markov(p: &PyMatrix) -> PyResult<Vec<f64>> {
    perron_core::stationary_markov(&p.0).map_err(py_err)
}

/// Spectral-radius estimate of `A` with row `i` zeroed.
#[pyfunction]
fn stopped_rho(a: &PyMatrix, i: usize) -> PyResult<f64> {
    perron_core::stopped_matrix(&a.0, i).map(|s| s.rho_estimate()).map_err(py_err)
}

fn plan(a: &NonNegativeMatrix, i: usize, lambda: f64, tol: f64) -> PyResult<TruncationPlan> {
    let stopped = perron_core::stopped_matrix(a, i).map_err(py_err)?;
    TruncationPlan::new(&stopped, lambda, tol, DEFAULT_N_MAX).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (a, i, lam, tol=perron_core::evaluate::DEFAULT_SERIES_TOL))]
fn series_vector(a: &PyMatrix, i: usize, lam: f64, tol: f64) -> PyResult<Vec<f64>> {
    let p = plan(&a.0, i, lam, tol)?;
    perron_core::series_vector(&a.0, i, lam, &p).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (a, i, lam, tol=perron_core::evaluate::DEFAULT_SERIES_TOL))]
fn path_sum_check(a: &PyMatrix, i: usize, lam: f64, tol: f64) -> PyResult<f64> {
    let p = plan(&a.0, i, lam, tol)?;
    perron_core::path_sum_check(&a.0, i, lam, &p).map_err(py_err)
}

#[pyfunction]
fn resolvent_vector(a: &PyMatrix, i: usize, lam: f64) -> PyResult<Vec<f64>> {
    perron_core::resolvent_vector(&a.0, i, lam).map_err(py_err)
}

fn parse_scaling(scaling: &str, margin: f64) -> PyResult<Scaling> {
    match scaling {
        "critical" => Ok(Scaling::Critical),
        "margin" => Ok(Scaling::SupercriticalMargin(margin)),
        other => Err(PyValueError::new_err(format!(
            "scaling must be `critical` or `margin`, got `{other}`"
        ))),
    }
}

fn parse_law(law: &str) -> PyResult<LawKind> {
    law.parse().map_err(py_err)
}

/// The constant `c` that gives `cA` the requested Perron eigenvalue.
#[pyfunction]
#[pyo3(signature = (a, scaling="critical", margin=DEFAULT_MARGIN))]
fn scaling_constant(a: &PyMatrix, scaling: &str, margin: f64) -> PyResult<f64> {
    choose_scaling(&a.0, parse_scaling(scaling, margin)?).map_err(py_err)
}

/// Monte Carlo eigenvector estimate.
#[pyclass(name = "Estimate", frozen, get_all)]
struct PyEstimate {
    method: String,
    u: Vec<f64>,
    stderr: Vec<f64>,
    ci95: Vec<(f64, f64)>,
    c: f64,
    lambda_eff: f64,
    normalization_sum: f64,
    stop_reasons: BTreeMap<String, u64>,
    infinite_variance_types: Vec<usize>,
    json: String,
}

#[pymethods]
impl PyEstimate {
    fn __repr__(&self) -> String {
        format!("Estimate(method={}, u={:?})", self.method, self.u)
    }
}

impl From<estimator::EigenvectorEstimate> for PyEstimate {
    fn from(e: estimator::EigenvectorEstimate) -> Self {
        Self {
            method: e.method.as_str().to_string(),
            u: e.values(),
            stderr: e.u_hat.iter().map(|x| x.stderr).collect(),
            ci95: e.u_hat.iter().map(|x| x.ci95).collect(),
            c: e.c_used,
            lambda_eff: e.lambda_used,
            normalization_sum: e.diagnostics.normalization_sum,
            stop_reasons: e.diagnostics.stop_reasons.clone(),
            infinite_variance_types: e.diagnostics.infinite_variance_types.clone(),
            json: serde_json::to_string(&e).expect("estimate serializes"),
        }
    }
}

#[pyfunction]
#[pyo3(signature = (a, replicas=10_000, seed=0, scaling="critical", margin=DEFAULT_MARGIN, law="poisson-rows"))]
fn estimate_gw_reciprocal(
    py: Python<'_>,
    a: &PyMatrix,
    replicas: u64,
    seed: u64,
    scaling: &str,
    margin: f64,
    law: &str,
) -> PyResult<PyEstimate> {
    let cfg = GwEstimatorConfig::for_scaling(&a.0, parse_law(law)?, parse_scaling(scaling, margin)?, seed)
        .map_err(py_err)?;
    let m = a.0.clone();
    py.detach(move || estimator::estimate_u_gw_reciprocal(&m, replicas, &cfg))
        .map(PyEstimate::from)
        .map_err(py_err)
}

/// `i` defaults to the type with the largest row sum.
#[pyfunction]
#[pyo3(signature = (a, i=None, replicas=10_000, seed=0, scaling="critical", margin=DEFAULT_MARGIN, law="poisson-rows"))]
#[allow(clippy::too_many_arguments)]
fn estimate_gw_vector(
    py: Python<'_>,
    a: &PyMatrix,
    i: Option<usize>,
    replicas: u64,
    seed: u64,
    scaling: &str,
    margin: f64,
    law: &str,
) -> PyResult<PyEstimate> {
    let cfg = GwEstimatorConfig::for_scaling(&a.0, parse_law(law)?, parse_scaling(scaling, margin)?, seed)
        .map_err(py_err)?;
    let i = i.unwrap_or_else(|| estimator::default_start_type(&a.0));
    let m = a.0.clone();
    py.detach(move || estimator::estimate_u_gw_vector(&m, i, replicas, &cfg))
        .map(PyEstimate::from)
        .map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (a, replicas=10_000, seed=0, scaling="critical", margin=DEFAULT_MARGIN, law="poisson-rows"))]
fn estimate_ct(
    py: Python<'_>,
    a: &PyMatrix,
    replicas: u64,
    seed: u64,
    scaling: &str,
    margin: f64,
    law: &str,
) -> PyResult<PyEstimate> {
    let cfg = CtEstimatorConfig::for_scaling(&a.0, parse_law(law)?, parse_scaling(scaling, margin)?, seed)
        .map_err(py_err)?;
    let m = a.0.clone();
    py.detach(move || estimator::estimate_u_ct(&m, replicas, &cfg))
        .map(PyEstimate::from)
        .map_err(py_err)
}

#[pymodule]
fn perron_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMatrix>()?;
    m.add_class::<PyEstimate>()?;
    m.add_function(wrap_pyfunction!(validate_primitive, m)?)?;
    m.add_function(wrap_pyfunction!(perron_pair, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_markov, m)?)?;
    m.add_function(wrap_pyfunction!(stopped_rho, m)?)?;
    m.add_function(wrap_pyfunction!(series_vector, m)?)?;
    m.add_function(wrap_pyfunction!(path_sum_check, m)?)?;
    m.add_function(wrap_pyfunction!(resolvent_vector, m)?)?;
    m.add_function(wrap_pyfunction!(scaling_constant, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_gw_reciprocal, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_gw_vector, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_ct, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_rejects_bad_index() {
        let a = NonNegativeMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert!(plan(&a, 0, 2.0, 1e-12).is_ok());
        assert!(matches!(
            perron_core::stopped_matrix(&a, 5),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn scaling_names() {
        assert_eq!(parse_scaling("critical", 1.5).ok(), Some(Scaling::Critical));
        assert_eq!(parse_scaling("margin", 2.0).ok(), Some(Scaling::SupercriticalMargin(2.0)));
        assert!(parse_law("single-child-markov").is_ok());
    }
}
