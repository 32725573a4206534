//! Python bindings: distributions, model terms, LAWS and MCMC fits, and
//! simulation studies. Structured results are returned as plain dicts.

use geoexpectile::cli::Manifest;
use geoexpectile::distributions::{self as dist, AndParams};
use geoexpectile::fit::{laws_fit_result, Method};
use geoexpectile::laws::{asymptotic_ci, iwls_backfit, select_lambda_cv, LawsConfig};
use geoexpectile::mcmc::{posterior_summary, run_chain, ChainConfig};
use geoexpectile::sim::{self, EstimatorSettings, ScenarioSpec, StudyKind};
use geoexpectile::terms::{self, ModelTerm, SplineSpec};
use geoexpectile::{Asymmetry, Error};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn to_py(err: Error) -> PyErr {
    match err {
        Error::InvalidParameter(_)
        | Error::DimensionMismatch { .. }
        | Error::OutsideDomain { .. }
        | Error::UnknownRegion(_)
        | Error::InvalidAdjacency(_) => PyValueError::new_err(err.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn asym(tau: f64) -> PyResult<Asymmetry> {
    Asymmetry::new(tau).map_err(to_py)
}

/// Serialize through JSON into native Python containers.
fn to_object<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Population τ-expectile of a built-in law such as `"normal(0,1)"`.
#[pyfunction]
fn true_expectile(law: &str, tau: f64) -> PyResult<f64> {
    let law = dist::parse_law(law).map_err(to_py)?;
    dist::true_expectile(&law, asym(tau)?).map_err(to_py)
}

/// Minimizer of the empirical asymmetric squared loss.
#[pyfunction]
fn sample_expectile(y: Vec<f64>, tau: f64) -> PyResult<f64> {
    if y.is_empty() {
        return Err(PyValueError::new_err("empty sample"));
    }
    Ok(dist::sample_expectile(&y, asym(tau)?))
}

#[pyfunction]
fn asymmetric_loss(y: Vec<f64>, eta: Vec<f64>, tau: f64) -> PyResult<f64> {
    if y.len() != eta.len() {
        return Err(PyValueError::new_err("y and eta differ in length"));
    }
    Ok(dist::asymmetric_loss(&y, &eta, asym(tau)?))
}

/// Log-density of the asymmetric normal distribution.
#[pyfunction]
fn and_log_density(y: f64, location: f64, scale2: f64, tau: f64) -> PyResult<f64> {
    let p = AndParams::new(location, scale2, asym(tau)?).map_err(to_py)?;
    Ok(dist::and_log_density(y, &p))
}

/// Mean and variance of the asymmetric normal distribution.
#[pyfunction]
fn and_moments(location: f64, scale2: f64, tau: f64) -> PyResult<(f64, f64)> {
    let p = AndParams::new(location, scale2, asym(tau)?).map_err(to_py)?;
    Ok(dist::and_moments(&p))
}

/// B-spline design matrix as a list of rows.
#[pyfunction]
#[pyo3(signature = (x, domain, inner_knots=20, degree=3))]
fn bspline_design(x: Vec<f64>, domain: (f64, f64), inner_knots: usize, degree: usize) -> PyResult<Vec<Vec<f64>>> {
    let spec = SplineSpec::new(degree, inner_knots, 2.min(degree + inner_knots), domain).map_err(to_py)?;
    let d = terms::bspline_design(&x, &spec).map_err(to_py)?;
    Ok(d.row_iter().map(|r| r.iter().cloned().collect()).collect())
}

/// Additive expectile regression model: a response plus model terms.
#[pyclass(module = "geoexpectile_py")]
struct Model {
    y: Vec<f64>,
    terms: Vec<ModelTerm>,
}

impl Model {
    fn check_len(&self, len: usize) -> PyResult<()> {
        if len != self.y.len() {
            return Err(PyValueError::new_err(format!(
                "covariate has {len} values but the response has {}",
                self.y.len()
            )));
        }
        Ok(())
    }
}

#[pymethods]
impl Model {
    #[new]
    fn new(y: Vec<f64>) -> PyResult<Self> {
        if y.is_empty() {
            return Err(PyValueError::new_err("empty response"));
        }
        Ok(Self { y, terms: Vec::new() })
    }

    /// Unpenalized linear effect of a numeric covariate.
    fn add_linear(&mut self, name: &str, x: Vec<f64>) -> PyResult<()> {
        self.check_len(x.len())?;
        let design = nalgebra_column(&x);
        self.terms
            .push(ModelTerm::linear(name, design, vec![name.to_string()]).map_err(to_py)?);
        Ok(())
    }

    /// Centered P-spline; the domain defaults to the observed range.
    #[pyo3(signature = (name, x, inner_knots=20, degree=3, difference_order=2, domain=None))]
    fn add_pspline(
        &mut self,
        name: &str,
        x: Vec<f64>,
        inner_knots: usize,
        degree: usize,
        difference_order: usize,
        domain: Option<(f64, f64)>,
    ) -> PyResult<()> {
        self.check_len(x.len())?;
        let domain = domain.unwrap_or_else(|| {
            let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        });
        let spec = SplineSpec::new(degree, inner_knots, difference_order, domain).map_err(to_py)?;
        self.terms
            .push(ModelTerm::pspline(name, &x, spec).map_err(to_py)?.centered());
        Ok(())
    }

    /// Centered Markov random field over regions; `adjacency` uses the
    /// `region: neighbour neighbour` line format.
    fn add_mrf(&mut self, name: &str, regions: Vec<String>, adjacency: &str) -> PyResult<()> {
        self.check_len(regions.len())?;
        let graph = terms::parse_adjacency(adjacency).map_err(to_py)?;
        self.terms
            .push(ModelTerm::mrf(name, &regions, graph).map_err(to_py)?.centered());
        Ok(())
    }

    #[getter]
    fn term_names(&self) -> Vec<String> {
        self.terms.iter().map(|t| t.name().to_string()).collect()
    }

    #[getter]
    fn nobs(&self) -> usize {
        self.y.len()
    }

    /// LAWS fit with cross-validated smoothing parameters (unless given)
    /// and sandwich intervals.
    #[pyo3(signature = (tau, lambdas=None, level=0.95, grid_len=100, seed=1))]
    fn fit_laws<'py>(
        &self,
        py: Python<'py>,
        tau: f64,
        lambdas: Option<Vec<f64>>,
        level: f64,
        grid_len: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let a = asym(tau)?;
        let cfg = LawsConfig { cv_seed: seed, ..Default::default() };
        let lambdas = match lambdas {
            Some(l) => l,
            None if self.terms.iter().any(ModelTerm::is_penalized) => {
                select_lambda_cv(&self.y, &self.terms, a, &cfg).map_err(to_py)?.lambdas
            }
            None => Vec::new(),
        };
        let fit = iwls_backfit(&self.y, &self.terms, a, &lambdas, &cfg).map_err(to_py)?;
        let ci = asymptotic_ci(&fit, &self.y, &self.terms, a, level).map_err(to_py)?;
        let result = laws_fit_result(&fit, &ci, &self.terms, tau, grid_len).map_err(to_py)?;
        to_object(py, &result)
    }

    /// Bayesian fit by MCMC; returns posterior means and credible intervals.
    #[pyo3(signature = (tau, iterations=35000, burn_in=5000, thinning=30, seed=1, level=0.95, grid_len=100))]
    #[allow(clippy::too_many_arguments)]
    fn fit_bayes<'py>(
        &self,
        py: Python<'py>,
        tau: f64,
        iterations: usize,
        burn_in: usize,
        thinning: usize,
        seed: u64,
        level: f64,
        grid_len: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let a = asym(tau)?;
        let cfg = ChainConfig { iterations, burn_in, thinning, seed, ..Default::default() };
        let (y, terms) = (&self.y, &self.terms);
        let out = py.detach(|| run_chain(y, terms, a, &cfg)).map_err(to_py)?;
        let result = posterior_summary(&out, terms, level, grid_len).map_err(to_py)?;
        to_object(py, &result)
    }
}

fn nalgebra_column(x: &[f64]) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_column_slice(x.len(), 1, x)
}

/// Run a simulation study and return the report as a dict.
#[pyfunction]
#[pyo3(signature = (model, error, n, replications, taus, methods=vec!["bayes".to_string(), "laws".to_string()], kind="point", seed=1, iterations=35000, burn_in=5000, thinning=30))]
#[allow(clippy::too_many_arguments)]
fn run_study<'py>(
    py: Python<'py>,
    model: &str,
    error: &str,
    n: usize,
    replications: usize,
    taus: Vec<f64>,
    methods: Vec<String>,
    kind: &str,
    seed: u64,
    iterations: usize,
    burn_in: usize,
    thinning: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = ScenarioSpec {
        model: model.parse().map_err(to_py)?,
        error: error.parse().map_err(to_py)?,
        n,
        replications,
        tau_list: taus.into_iter().map(asym).collect::<PyResult<_>>()?,
        base_seed: seed,
    };
    let methods: Vec<Method> = methods.iter().map(|m| m.parse().map_err(to_py)).collect::<PyResult<_>>()?;
    let kind = match kind {
        "point" => StudyKind::Point,
        "interval" => StudyKind::Interval,
        other => return Err(PyValueError::new_err(format!("unknown study kind `{other}`"))),
    };
    let settings = EstimatorSettings {
        chain: ChainConfig { iterations, burn_in, thinning, ..Default::default() },
        ..Default::default()
    };
    let report = py.detach(|| sim::run_study(&spec, &methods, kind, &settings)).map_err(to_py)?;
    to_object(py, &report)
}

/// Read a run manifest written by the command-line tool.
#[pyfunction]
fn load_manifest<'py>(py: Python<'py>, path: &str) -> PyResult<Bound<'py, PyAny>> {
    let m = Manifest::load(std::path::Path::new(path)).map_err(|e| PyValueError::new_err(e.message))?;
    to_object(py, &m)
}

#[pymodule]
fn geoexpectile_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(true_expectile, m)?)?;
    m.add_function(wrap_pyfunction!(sample_expectile, m)?)?;
    m.add_function(wrap_pyfunction!(asymmetric_loss, m)?)?;
    m.add_function(wrap_pyfunction!(and_log_density, m)?)?;
    m.add_function(wrap_pyfunction!(and_moments, m)?)?;
    m.add_function(wrap_pyfunction!(bspline_design, m)?)?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    m.add_function(wrap_pyfunction!(load_manifest, m)?)?;
    m.add_class::<Model>()?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
