//! Python bindings. Build with maturin; the module imports as `crimebounds`.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use crimebounds::bounds::{self, ComputeOptions, PopBasis};
use crimebounds::comparison::{self, Metric, PctBase};
use crimebounds::domain::{Dataset, HierarchyAssumption};
use crimebounds::ingest::{embedded_reference, load, SourceManifest};
use crimebounds::interval::{self, ConfidenceSpec, Z_95};
use crimebounds::sim::{self, SimScenario};
use crimebounds::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse<T: std::str::FromStr>(s: &str, what: &str) -> PyResult<T> {
    s.parse()
        .map_err(|_| PyValueError::new_err(format!("unknown {what}: {s}")))
}

/// Closed interval `[lb, ub]`.
#[pyclass(name = "Interval", frozen, eq, from_py_object)]
#[derive(Clone, Copy, PartialEq)]
pub struct PyInterval(pub interval::Interval);

#[pymethods]
impl PyInterval {
    #[new]
    fn new(lb: f64, ub: f64) -> PyResult<Self> {
        interval::Interval::new(lb, ub)
            .map(PyInterval)
            .map_err(py_err)
    }

    #[getter]
    fn lb(&self) -> f64 {
        self.0.lb()
    }

    #[getter]
    fn ub(&self) -> f64 {
        self.0.ub()
    }

    #[getter]
    fn width(&self) -> f64 {
        self.0.width()
    }

    #[getter]
    fn midpoint(&self) -> f64 {
        self.0.midpoint()
    }

    fn contains(&self, x: f64) -> bool {
        self.0.contains(x)
    }

    fn overlaps(&self, other: &PyInterval) -> bool {
        self.0.overlaps(&other.0)
    }

    fn scale(&self, k: f64) -> PyResult<Self> {
        self.0.scale(k).map(PyInterval).map_err(py_err)
    }

    fn divide_by(&self, denom: &PyInterval) -> PyResult<Self> {
        self.0.divide_by(&denom.0).map(PyInterval).map_err(py_err)
    }

    /// Endpoints rounded half away from zero.
    #[pyo3(signature = (places = 0))]
    fn rounded(&self, places: u32) -> (f64, f64) {
        self.0.rounded(places)
    }

    fn __repr__(&self) -> String {
        format!("Interval({}, {})", self.0.lb(), self.0.ub())
    }
}

#[pyclass(name = "BoundsResult", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyBoundsResult(pub bounds::BoundsResult);

#[pymethods]
impl PyBoundsResult {
    #[getter]
    fn city(&self) -> String {
        self.0.city.to_string()
    }

    #[getter]
    fn year(&self) -> i32 {
        self.0.year
    }

    #[getter]
    fn b_p(&self) -> u64 {
        self.0.b_p
    }

    #[getter]
    fn p_r(&self) -> PyInterval {
        PyInterval(self.0.p_r)
    }

    #[getter]
    fn b_k(&self) -> PyInterval {
        PyInterval(self.0.b_k)
    }

    #[getter]
    fn b_a(&self) -> PyInterval {
        PyInterval(self.0.b_a)
    }

    #[getter]
    fn rate_pop(&self) -> PyInterval {
        PyInterval(self.0.rate_pop)
    }

    #[getter]
    fn rate_hh(&self) -> PyInterval {
        PyInterval(self.0.rate_hh)
    }

    #[getter]
    fn std_rate_pop(&self) -> f64 {
        self.0.std_rate_pop
    }

    #[getter]
    fn std_rate_hh(&self) -> f64 {
        self.0.std_rate_hh
    }

    #[getter]
    fn h_s(&self) -> Option<u64> {
        self.0.h_s
    }

    #[getter]
    fn h_f(&self) -> Option<u64> {
        self.0.h_f
    }

    #[getter]
    fn incomplete(&self) -> bool {
        self.0.incomplete
    }

    fn __repr__(&self) -> String {
        let r = &self.0;
        format!(
            "BoundsResult({} {}, b_a=[{:.0}, {:.0}], rate_pop=[{:.0}, {:.0}])",
            r.city,
            r.year,
            r.b_a.lb(),
            r.b_a.ub(),
            r.rate_pop.lb(),
            r.rate_pop.ub()
        )
    }
}

#[pyclass(name = "Comparison", frozen)]
pub struct PyComparison(pub comparison::ComparisonVerdict);

#[pymethods]
impl PyComparison {
    #[getter]
    fn verdict(&self) -> &'static str {
        self.0.verdict.as_str()
    }

    #[getter]
    fn interval_a(&self) -> PyInterval {
        PyInterval(self.0.interval_a)
    }

    #[getter]
    fn interval_b(&self) -> PyInterval {
        PyInterval(self.0.interval_b)
    }

    #[getter]
    fn point_a(&self) -> f64 {
        self.0.point_a
    }

    #[getter]
    fn point_b(&self) -> f64 {
        self.0.point_b
    }

    #[getter]
    fn point_pct_change(&self) -> Option<f64> {
        self.0.point_pct_change
    }

    #[getter]
    fn incomplete(&self) -> bool {
        self.0.incomplete
    }

    fn __repr__(&self) -> String {
        let v = &self.0;
        format!(
            "Comparison({} {} vs {} {}: {})",
            v.subject_a.city,
            v.subject_a.year,
            v.subject_b.city,
            v.subject_b.year,
            v.verdict.as_str()
        )
    }
}

#[pyclass(name = "CoverageReport", frozen)]
pub struct PyCoverageReport(pub sim::CoverageReport);

#[pymethods]
impl PyCoverageReport {
    #[getter]
    fn trials(&self) -> u64 {
        self.0.trials
    }

    #[getter]
    fn covered_count(&self) -> u64 {
        self.0.covered_count
    }

    #[getter]
    fn coverage_rate(&self) -> f64 {
        self.0.coverage_rate
    }

    #[getter]
    fn covered_expectation(&self) -> bool {
        self.0.covered_expectation
    }

    #[getter]
    fn mean_interval_width(&self) -> f64 {
        self.0.mean_interval_width
    }

    #[getter]
    fn in_assumption(&self) -> bool {
        self.0.in_assumption
    }

    #[getter]
    fn rng_algorithm(&self) -> String {
        self.0.rng_algorithm.clone()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!(
            "CoverageReport(trials={}, coverage_rate={})",
            self.0.trials, self.0.coverage_rate
        )
    }
}

/// Confidence interval for a reporting rate given in percent, as probabilities.
#[pyfunction]
#[pyo3(signature = (rate_pct, se_pct, z = Z_95))]
fn confidence_interval(rate_pct: f64, se_pct: f64, z: f64) -> PyResult<PyInterval> {
    let spec = ConfidenceSpec::new(95.0, z).map_err(py_err)?;
    interval::confidence_interval(rate_pct, se_pct, &spec)
        .map(|c| PyInterval(c.interval))
        .map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (b_p, theta_lb = 0.005, theta_ub = 0.01))]
fn known_count_bounds(b_p: u64, theta_lb: f64, theta_ub: f64) -> PyResult<PyInterval> {
    let h = hierarchy(theta_lb, theta_ub)?;
    Ok(PyInterval(bounds::known_count_bounds(b_p, &h)))
}

#[pyfunction]
fn actual_count_bounds(b_k: PyInterval, p_r: PyInterval) -> PyResult<PyInterval> {
    bounds::actual_count_bounds(b_k.0, p_r.0)
        .map(PyInterval)
        .map_err(py_err)
}

#[pyfunction]
fn households(n: u64, pph: f64) -> PyResult<u64> {
    bounds::households(n, pph).map_err(py_err)
}

#[pyfunction]
fn percent_change(old: f64, new: f64) -> PyResult<f64> {
    comparison::percent_change(old, new).map_err(py_err)
}

/// Sign verdict for two intervals.
#[pyfunction]
fn classify(a: PyInterval, b: PyInterval) -> &'static str {
    comparison::classify(&a.0, &b.0).as_str()
}

fn hierarchy(theta_lb: f64, theta_ub: f64) -> PyResult<HierarchyAssumption> {
    let theta = interval::Interval::new(theta_lb, theta_ub).map_err(py_err)?;
    HierarchyAssumption::new(theta).map_err(py_err)
}

/// Bounds for every city-year of a dataset. Without `manifest` the embedded
/// North Carolina data is used.
#[pyfunction]
#[pyo3(signature = (manifest = None, theta_lb = 0.005, theta_ub = 0.01, z = Z_95, pop_basis = "state"))]
fn compute(
    manifest: Option<PathBuf>,
    theta_lb: f64,
    theta_ub: f64,
    z: f64,
    pop_basis: &str,
) -> PyResult<Vec<PyBoundsResult>> {
    let mut ds: Dataset = match manifest {
        Some(p) => load(&SourceManifest::read(&p).map_err(py_err)?).map_err(py_err)?,
        None => embedded_reference(),
    };
    ds.hierarchy = hierarchy(theta_lb, theta_ub)?;
    ds.confidence = ConfidenceSpec::new(ds.confidence.level(), z).map_err(py_err)?;
    let opts = ComputeOptions {
        basis: parse::<PopBasis>(pop_basis, "population basis")?,
        ..ComputeOptions::default()
    };
    let results = bounds::compute_all(&ds, &opts).map_err(py_err)?;
    Ok(results.into_iter().map(PyBoundsResult).collect())
}

fn unwrap_results(results: Vec<PyRef<'_, PyBoundsResult>>) -> Vec<bounds::BoundsResult> {
    results.iter().map(|r| r.0.clone()).collect()
}

#[pyfunction]
fn compare_years(
    results: Vec<PyRef<'_, PyBoundsResult>>,
    city: &str,
    year1: i32,
    year2: i32,
    metric: &str,
) -> PyResult<PyComparison> {
    let metric: Metric = metric.parse().map_err(py_err)?;
    comparison::compare_years(&unwrap_results(results), city, year1, year2, metric)
        .map(PyComparison)
        .map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (results, city1, city2, year, metric, pct_base = "first"))]
fn compare_cities(
    results: Vec<PyRef<'_, PyBoundsResult>>,
    city1: &str,
    city2: &str,
    year: i32,
    metric: &str,
    pct_base: &str,
) -> PyResult<PyComparison> {
    let metric: Metric = metric.parse().map_err(py_err)?;
    let pct_base: PctBase = pct_base.parse().map_err(py_err)?;
    comparison::compare_cities(
        &unwrap_results(results),
        city1,
        city2,
        year,
        metric,
        pct_base,
    )
    .map(PyComparison)
    .map_err(py_err)
}

/// Monte Carlo coverage of the actual-count interval.
#[pyfunction]
#[pyo3(signature = (
    true_count, p_r_true, upgrade_frac_true, trials, seed,
    assumed_theta = (0.005, 0.01), assumed_pr = (0.540, 0.606)
))]
fn run_coverage(
    true_count: u64,
    p_r_true: f64,
    upgrade_frac_true: f64,
    trials: u64,
    seed: u64,
    assumed_theta: (f64, f64),
    assumed_pr: (f64, f64),
) -> PyResult<PyCoverageReport> {
    let sc = SimScenario {
        true_count,
        p_r_true,
        upgrade_frac_true,
        trials,
        seed,
        assumed_theta: interval::Interval::new(assumed_theta.0, assumed_theta.1).map_err(py_err)?,
        assumed_pr: interval::Interval::new(assumed_pr.0, assumed_pr.1).map_err(py_err)?,
    };
    sc.validate().map_err(py_err)?;
    Ok(PyCoverageReport(sim::run_coverage(&sc)))
}

#[pymodule]
#[pyo3(name = "crimebounds")]
fn crimebounds_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("Z_95", Z_95)?;
    m.add_class::<PyInterval>()?;
    m.add_class::<PyBoundsResult>()?;
    m.add_class::<PyComparison>()?;
    m.add_class::<PyCoverageReport>()?;
    m.add_function(wrap_pyfunction!(confidence_interval, m)?)?;
    m.add_function(wrap_pyfunction!(known_count_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(actual_count_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(households, m)?)?;
    m.add_function(wrap_pyfunction!(percent_change, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(compute, m)?)?;
    m.add_function(wrap_pyfunction!(compare_years, m)?)?;
    m.add_function(wrap_pyfunction!(compare_cities, m)?)?;
    m.add_function(wrap_pyfunction!(run_coverage, m)?)?;
    Ok(())
}
