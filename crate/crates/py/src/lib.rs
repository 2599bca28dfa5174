//! Python bindings: distributions, estimators, the Euler error law and the
//! experiment runner.

use arbfun_core::chaos::{theorem9_limit, ChaosElement, RnWeights};
use arbfun_core::experiments::{self, ExperimentConfig, ResultRow};
use arbfun_core::graduation;
use arbfun_core::mechsde::{self, SdeSystem};
use arbfun_core::paths::{OscillatorSpec, PeriodicFn};
use arbfun_core::stochastics::{DistributionSpec, EstimateWithError, RandomStream, TestFunction};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn py_err(e: arbfun_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn pair(e: EstimateWithError) -> (f64, f64) {
    (e.value, e.std_error)
}

/// A law from the catalog, e.g. `"normal"`, `"uniform(0,1)"`, `"lattice(10)"`.
#[pyclass(name = "Distribution", frozen)]
struct PyDistribution {
    inner: DistributionSpec,
}

#[pymethods]
impl PyDistribution {
    #[new]
    fn new(name: &str) -> PyResult<Self> {
        Ok(Self { inner: DistributionSpec::parse(name).map_err(py_err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// `count` draws, flattened row-major.
    fn sample(&self, count: usize, seed: u64) -> PyResult<Vec<f64>> {
        let mut s = RandomStream::new(seed, 0);
        Ok(self.inner.sample(&mut s, count).map_err(py_err)?.coordinates().to_vec())
    }

    fn __repr__(&self) -> String {
        format!("Distribution({:?})", self.inner)
    }
}

/// One output row of an experiment.
#[pyclass(name = "ResultRow", frozen, get_all)]
struct PyResultRow {
    experiment: String,
    n: String,
    statistic: String,
    estimate: f64,
    std_error: f64,
    target: Option<f64>,
    provenance: Option<String>,
    z_score: Option<f64>,
    passed: bool,
}

impl PyResultRow {
    fn from_row(r: &ResultRow, gate: f64) -> Self {
        Self {
            experiment: r.experiment.clone(),
            n: r.n.to_string(),
            statistic: r.statistic.clone(),
            estimate: r.estimate,
            std_error: r.std_error,
            target: r.target.map(|t| t.0),
            provenance: r.target.map(|t| t.1.to_string()),
            z_score: r.z_score(),
            passed: r.passes(gate),
        }
    }
}

#[pymethods]
impl PyResultRow {
    fn __repr__(&self) -> String {
        format!("ResultRow({}, n={}, {}={}±{})", self.experiment, self.n, self.statistic, self.estimate, self.std_error)
    }
}

/// `(id, module, description)` for every experiment.
#[pyfunction]
fn list_experiments() -> Vec<(String, String, String)> {
    experiments::EXPERIMENTS.iter().map(|e| (e.id.into(), e.module.into(), e.description.into())).collect()
}

/// Runs one experiment; keyword settings use the same keys as config files.
#[pyfunction]
#[pyo3(signature = (id, seed=1, replicates=None, n_ladder=None, grid_mult=None, gate=None))]
fn run_experiment(
    id: &str,
    seed: u64,
    replicates: Option<usize>,
    n_ladder: Option<Vec<usize>>,
    grid_mult: Option<usize>,
    gate: Option<f64>,
) -> PyResult<(Vec<PyResultRow>, String)> {
    let mut cfg = ExperimentConfig { seed, replicates, ..ExperimentConfig::default() };
    if let Some(l) = n_ladder {
        let text = l.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",");
        cfg.set("n_ladder", &text).map_err(py_err)?;
    }
    if let Some(g) = grid_mult {
        cfg.grid_mult = g;
    }
    if let Some(g) = gate {
        cfg.gate = g;
    }
    let rows = experiments::run_experiment(id, &cfg).map_err(py_err)?;
    let csv = experiments::csv_string(&rows);
    Ok((rows.iter().map(|r| PyResultRow::from_row(r, cfg.gate)).collect(), csv))
}

/// `n (Y_n - Y)` under nearest rounding, flattened.
#[pyfunction]
fn scaled_error_samples(dist: &PyDistribution, n: usize, count: usize, seed: u64) -> PyResult<Vec<f64>> {
    let pts = graduation::scaled_error_samples(&dist.inner, n, count, &RandomStream::new(seed, 0)).map_err(py_err)?;
    Ok(pts.coordinates().to_vec())
}

/// `(estimate, std_error)` of `n² E[(φ(Y_n) - φ(Y))²]`.
#[pyfunction]
fn gamma_estimate(function: &str, dist: &PyDistribution, n: usize, count: usize, seed: u64) -> PyResult<(f64, f64)> {
    let phi = TestFunction::parse(function).map_err(py_err)?;
    let e = graduation::gamma_estimate(&phi, &dist.inner, n, count, &RandomStream::new(seed, 0)).map_err(py_err)?;
    Ok(pair(e))
}

/// `(value, target)` of the deterministic `n² E|R_n X - X|²` for the unit
/// constant kernel of order `k` on `m` steps.
#[pyfunction]
fn chaos_defect(k: usize, n: usize, m: usize) -> PyResult<(f64, f64)> {
    let x = ChaosElement::unit_constant(k, m).map_err(py_err)?;
    let theta = OscillatorSpec::new(PeriodicFn::NormalizedSawtooth);
    let v = theorem9_limit(&x, &RnWeights::sawtooth(n, m).map_err(py_err)?, theta.sup).map_err(py_err)?;
    Ok((v.value, v.target))
}

/// Euler error law of a catalog system: per `n`, `(error, limit)` triples of
/// `(mean, variance, cov with B₁)` as `(estimate, std_error)` pairs.
#[pyfunction]
#[pyo3(signature = (system, ladder, count, seed=1, refine=64))]
#[allow(clippy::type_complexity)]
fn euler_error_law(
    system: &str,
    ladder: Vec<usize>,
    count: usize,
    seed: u64,
    refine: usize,
) -> PyResult<Vec<(usize, Vec<(f64, f64)>, Vec<(f64, f64)>)>> {
    let sys = SdeSystem::from_name(system).map_err(py_err)?;
    let report =
        mechsde::error_law_comparison(&sys, &ladder, refine, count, &RandomStream::new(seed, 0)).map_err(py_err)?;
    Ok(report
        .rows
        .iter()
        .map(|r| {
            let e = r.error.as_array().iter().map(|(_, v)| pair(*v)).collect();
            let u = r.limit.as_array().iter().map(|(_, v)| pair(*v)).collect();
            (r.n, e, u)
        })
        .collect())
}

#[pymodule]
fn arbfun(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CSV_HEADER", experiments::CSV_HEADER)?;
    m.add_class::<PyDistribution>()?;
    m.add_class::<PyResultRow>()?;
    m.add_function(wrap_pyfunction!(list_experiments, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(scaled_error_samples, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(chaos_defect, m)?)?;
    m.add_function(wrap_pyfunction!(euler_error_law, m)?)?;
    Ok(())
}
