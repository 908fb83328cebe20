//! Python bindings. Points and polygons cross the boundary as lists of
//! `(x, y)` tuples; reports come back as plain dicts.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use baseset::convex_dp::{self, OptimizerResult as CoreResult};
use baseset::criterion::{self, DoseResponseData as CoreDose, StumpConfig, WeightedSample as CoreSample};
use baseset::experiments::{self, EstimateConfig, InstanceKind, OwnedData, TauMode};
use baseset::geometry::{self, ConvexPolygon, Point};
use baseset::kernel::{regression_weights, GridData as CoreGrid};
use baseset::synth::{self, GroundTruthScene, Seed};
use baseset::tau::{self, Smoothing, TauIterConfig};

fn err(e: baseset::Error) -> PyErr {
    match e {
        baseset::Error::Io(io) => PyOSError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_points(v: &[(f64, f64)]) -> Vec<Point> {
    v.iter().map(|&(x, y)| Point::new(x, y)).collect()
}

fn tuples(v: &[Point]) -> Vec<(f64, f64)> {
    v.iter().map(|p| (p.x, p.y)).collect()
}

fn to_polygon(v: &[(f64, f64)]) -> ConvexPolygon {
    ConvexPolygon::hull_of(&to_points(v))
}

fn to_py_json<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Ground-truth scene with a convex baseline region.
#[pyclass(name = "Scene", module = "pybaseset")]
struct Scene {
    inner: GroundTruthScene,
}

#[pymethods]
impl Scene {
    /// Disc of radius 0.25 at the centre of the unit square.
    #[staticmethod]
    fn disc_preset() -> Self {
        Scene { inner: GroundTruthScene::disc_preset() }
    }

    /// Parse flat `key = value` scene text.
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Scene { inner: GroundTruthScene::parse("<python>", text).map_err(err)? })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn with_sigma0(&self, sigma0: f64) -> Self {
        Scene { inner: self.inner.clone().with_sigma0(sigma0) }
    }

    #[getter]
    fn tau0(&self) -> f64 {
        self.inner.tau0
    }

    #[getter]
    fn sigma0(&self) -> f64 {
        self.inner.sigma0
    }

    fn s0_area(&self) -> f64 {
        self.inner.s0_area()
    }

    fn s0_polygon(&self) -> Vec<(f64, f64)> {
        tuples(self.inner.s0_polygon().vertices())
    }

    fn mu(&self, x: f64, y: f64) -> f64 {
        self.inner.mu(&Point::new(x, y))
    }

    fn digest(&self) -> String {
        self.inner.digest()
    }

    fn __repr__(&self) -> String {
        format!("Scene(tau0={}, sigma0={}, area={:.6})", self.inner.tau0, self.inner.sigma0, self.inner.s0_area())
    }
}

/// Replicate means at scattered design points.
#[pyclass(name = "DoseResponseData", module = "pybaseset")]
struct DoseResponseData {
    inner: CoreDose,
}

#[pymethods]
impl DoseResponseData {
    #[new]
    #[pyo3(signature = (points, replicate_means, m, sigma0=None))]
    fn new(points: Vec<(f64, f64)>, replicate_means: Vec<f64>, m: usize, sigma0: Option<f64>) -> PyResult<Self> {
        Ok(DoseResponseData { inner: CoreDose::new(to_points(&points), replicate_means, m, sigma0).map_err(err)? })
    }

    #[getter]
    fn points(&self) -> Vec<(f64, f64)> {
        tuples(&self.inner.points)
    }

    #[getter]
    fn replicate_means(&self) -> Vec<f64> {
        self.inner.replicate_means.clone()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn to_csv(&self) -> String {
        baseset::io::dose_response_to_csv(&self.inner, None)
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        Ok(DoseResponseData { inner: baseset::io::dose_response_from_csv("<python>", text).map_err(err)? })
    }
}

/// Responses on the regular m×m grid.
#[pyclass(name = "GridData", module = "pybaseset")]
struct GridData {
    inner: CoreGrid,
}

#[pymethods]
impl GridData {
    #[new]
    #[pyo3(signature = (m, responses, sigma0=None))]
    fn new(m: usize, responses: Vec<f64>, sigma0: Option<f64>) -> PyResult<Self> {
        Ok(GridData { inner: CoreGrid::new(m, responses, sigma0).map_err(err)? })
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m
    }

    #[getter]
    fn responses(&self) -> Vec<f64> {
        self.inner.responses.clone()
    }

    fn to_csv(&self) -> String {
        baseset::io::grid_to_csv(&self.inner, None)
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        Ok(GridData { inner: baseset::io::grid_from_csv("<python>", text).map_err(err)? })
    }
}

/// Points with signed weights; the input to the polygon optimizer.
#[pyclass(name = "WeightedSample", module = "pybaseset")]
struct WeightedSample {
    inner: CoreSample,
}

#[pymethods]
impl WeightedSample {
    #[new]
    #[pyo3(signature = (points, weights, gamma=criterion::DEFAULT_GAMMA, normalizer=None))]
    fn new(points: Vec<(f64, f64)>, weights: Vec<f64>, gamma: f64, normalizer: Option<f64>) -> PyResult<Self> {
        let n = normalizer.unwrap_or(points.len() as f64);
        Ok(WeightedSample { inner: CoreSample::with_normalizer(to_points(&points), weights, gamma, n).map_err(err)? })
    }

    #[getter]
    fn points(&self) -> Vec<(f64, f64)> {
        tuples(&self.inner.points)
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights.clone()
    }

    #[getter]
    fn normalizer(&self) -> f64 {
        self.inner.normalizer
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Criterion of the convex hull of `polygon`.
    fn criterion(&self, polygon: Vec<(f64, f64)>) -> f64 {
        criterion::criterion_value(&self.inner, &to_polygon(&polygon))
    }
}

/// Minimizing polygon with its criterion and bookkeeping.
#[pyclass(name = "OptimizerResult", module = "pybaseset")]
struct OptimizerResult {
    inner: CoreResult,
}

#[pymethods]
impl OptimizerResult {
    #[getter]
    fn polygon(&self) -> Vec<(f64, f64)> {
        tuples(self.inner.polygon.vertices())
    }

    #[getter]
    fn criterion(&self) -> f64 {
        self.inner.criterion
    }

    #[getter]
    fn included_indices(&self) -> Vec<usize> {
        self.inner.included_indices.clone()
    }

    #[getter]
    fn vertex_chain(&self) -> Vec<usize> {
        self.inner.vertex_chain.clone()
    }

    #[getter]
    fn area(&self) -> f64 {
        self.inner.polygon.area()
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py_json(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "OptimizerResult(criterion={}, vertices={}, included={})",
            self.inner.criterion,
            self.inner.polygon.len(),
            self.inner.included_count()
        )
    }
}

fn owned_data(data: &Bound<'_, PyAny>) -> PyResult<OwnedData> {
    if let Ok(d) = data.cast::<DoseResponseData>() {
        return Ok(OwnedData::Dose(d.borrow().inner.clone()));
    }
    if let Ok(g) = data.cast::<GridData>() {
        return Ok(OwnedData::Grid(g.borrow().inner.clone()));
    }
    Err(PyValueError::new_err("data must be DoseResponseData or GridData"))
}

fn tau_mode(mode: &Bound<'_, PyAny>) -> PyResult<TauMode> {
    if let Ok(t) = mode.extract::<f64>() {
        return Ok(TauMode::Known(t));
    }
    match mode.extract::<String>()?.as_str() {
        "init" => Ok(TauMode::Init),
        "iterative" => Ok(TauMode::Iterative),
        other => Err(PyValueError::new_err(format!("tau_mode must be a number, 'init' or 'iterative', not '{other}'"))),
    }
}

#[pyfunction]
fn simulate_dose_response(scene: PyRef<'_, Scene>, m: usize, n: usize, seed: u64) -> PyResult<DoseResponseData> {
    Ok(DoseResponseData { inner: synth::sample_dose_response(&scene.inner, m, n, Seed(seed)).map_err(err)? })
}

#[pyfunction]
fn simulate_grid(scene: PyRef<'_, Scene>, m: usize, seed: u64) -> PyResult<GridData> {
    Ok(GridData { inner: synth::sample_grid(&scene.inner, m, Seed(seed)).map_err(err)? })
}

/// Stump weights at a given baseline level.
#[pyfunction]
#[pyo3(signature = (data, tau_hat, gamma=criterion::DEFAULT_GAMMA))]
fn weights(data: &Bound<'_, PyAny>, tau_hat: f64, gamma: f64) -> PyResult<WeightedSample> {
    let cfg = StumpConfig::new(gamma, tau_hat).map_err(err)?;
    let smoothing = Smoothing::default();
    let inner = match owned_data(data)? {
        OwnedData::Dose(d) => criterion::dose_response_weights(&d, &cfg),
        OwnedData::Grid(g) => regression_weights(&g, &smoothing.kernel, &smoothing.policy, &cfg),
    }
    .map_err(err)?;
    Ok(WeightedSample { inner })
}

/// Exact minimizer of the weighted criterion over convex polygons.
#[pyfunction]
fn estimate_set(py: Python<'_>, sample: PyRef<'_, WeightedSample>) -> OptimizerResult {
    let s = sample.inner.clone();
    OptimizerResult { inner: py.detach(move || convex_dp::estimate_set(&s)) }
}

/// Enumeration of every vertex subset; small inputs only.
#[pyfunction]
#[pyo3(signature = (sample, max_n=convex_dp::DEFAULT_ORACLE_MAX_N))]
fn brute_force_oracle(sample: PyRef<'_, WeightedSample>, max_n: usize) -> PyResult<OptimizerResult> {
    Ok(OptimizerResult { inner: convex_dp::brute_force_oracle(&sample.inner, max_n).map_err(err)? })
}

/// Full pipeline; returns the report as a dict. `tau_mode` is a known level,
/// `"init"` (the default) or `"iterative"`.
#[pyfunction]
#[pyo3(signature = (data, scene=None, tau_mode=None, gamma=criterion::DEFAULT_GAMMA, mc_points=100_000, seed=0))]
fn estimate<'py>(
    py: Python<'py>,
    data: &Bound<'py, PyAny>,
    scene: Option<PyRef<'py, Scene>>,
    tau_mode: Option<Bound<'py, PyAny>>,
    gamma: f64,
    mc_points: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let owned = owned_data(data)?;
    let cfg = EstimateConfig { gamma, tau_mode: tau_mode.as_ref().map(self::tau_mode).transpose()?.unwrap_or(TauMode::Init), mc_points, ..Default::default() };
    let scene = scene.map(|s| s.inner.clone());
    let report = py
        .detach(|| experiments::run_estimate(owned.as_ref(), scene.as_ref(), &cfg, Seed(seed)))
        .map_err(err)?;
    to_py_json(py, &report)
}

/// Iterative baseline fit; returns the fit as a dict.
#[pyfunction]
#[pyo3(signature = (data, gamma=criterion::DEFAULT_GAMMA, delta_thin=tau::DEFAULT_DELTA_THIN, max_iters=5))]
fn tau_fit<'py>(py: Python<'py>, data: &Bound<'py, PyAny>, gamma: f64, delta_thin: f64, max_iters: usize) -> PyResult<Bound<'py, PyAny>> {
    let owned = owned_data(data)?;
    let cfg = TauIterConfig { gamma, delta_thin, max_iters, ..Default::default() };
    let (fit, _) = py.detach(|| tau::tau_iterate(owned.as_ref(), &cfg, &Smoothing::default())).map_err(err)?;
    to_py_json(py, &fit)
}

/// DP against enumeration; returns `(failures, max_abs_diff)`.
#[pyfunction]
#[pyo3(signature = (count=200, n_min=4, n_max=12, seed=0))]
fn oracle_check(py: Python<'_>, count: usize, n_min: usize, n_max: usize, seed: u64) -> PyResult<(usize, f64)> {
    let r = py
        .detach(|| experiments::oracle_check(count, n_min, n_max, &[InstanceKind::Random], Seed(seed)))
        .map_err(err)?;
    Ok((r.failures, r.max_abs_diff))
}

/// d, d_F and Hausdorff distance of `polygon` to the scene's region.
#[pyfunction]
#[pyo3(signature = (polygon, scene, mc_points=100_000, seed=0))]
fn metrics<'py>(py: Python<'py>, polygon: Vec<(f64, f64)>, scene: PyRef<'py, Scene>, mc_points: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let m = baseset::metrics::compute_metrics(&to_polygon(&polygon), &scene.inner, mc_points, Seed(seed));
    to_py_json(py, &m)
}

#[pyfunction]
fn convex_hull(points: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    tuples(to_polygon(&points).vertices())
}

#[pyfunction]
fn symmetric_difference_area(a: Vec<(f64, f64)>, b: Vec<(f64, f64)>) -> f64 {
    geometry::symmetric_difference_area(&to_polygon(&a), &to_polygon(&b))
}

/// ℓ∞ Hausdorff distance between two non-empty convex polygons.
#[pyfunction]
fn hausdorff_distance(a: Vec<(f64, f64)>, b: Vec<(f64, f64)>) -> PyResult<f64> {
    geometry::hausdorff_distance(&to_polygon(&a), &to_polygon(&b)).map_err(err)
}

#[pymodule]
fn pybaseset(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Scene>()?;
    m.add_class::<DoseResponseData>()?;
    m.add_class::<GridData>()?;
    m.add_class::<WeightedSample>()?;
    m.add_class::<OptimizerResult>()?;
    m.add_function(wrap_pyfunction!(simulate_dose_response, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_grid, m)?)?;
    m.add_function(wrap_pyfunction!(weights, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_set, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(tau_fit, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_check, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(convex_hull, m)?)?;
    m.add_function(wrap_pyfunction!(symmetric_difference_area, m)?)?;
    m.add_function(wrap_pyfunction!(hausdorff_distance, m)?)?;
    Ok(())
}
