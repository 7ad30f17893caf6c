//! Python bindings: thin wrappers around the localization library's main
//! types and operations. Positions and directions cross the boundary as
//! plain tuples; scenes stay opaque handles; results come back as small
//! attribute-only classes.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use locfuse::aoa::AoaMeasurement;
use locfuse::geometry::{Point3, UnitVec3};
use locfuse::harness::{self, Algorithm, MeasurementSet};
use locfuse::joint::SolverConfig;
use locfuse::sim::{self, Scene as CoreScene, TestPoint, TrialConfig};
use locfuse::toa::ToaMeasurement;

type Triple = (f64, f64, f64);
type ToaArg = (String, f64);
type AoaArg = (String, Triple, Option<f64>);
type AoaSample = (String, Triple, f64);
type EpochSet = (String, u64, Vec<ToaArg>, Vec<AoaSample>);

fn py_err(e: locfuse::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn point(p: Triple) -> Point3 {
    Point3::new(p.0, p.1, p.2)
}

fn to_toa(measurements: Vec<ToaArg>) -> Vec<ToaMeasurement> {
    measurements
        .into_iter()
        .map(|(id, range_m)| ToaMeasurement::new(id, range_m))
        .collect()
}

fn to_aoa(measurements: Vec<AoaArg>) -> PyResult<Vec<AoaMeasurement>> {
    measurements
        .into_iter()
        .map(|(id, dir, kappa)| {
            let direction = UnitVec3::new(dir.0, dir.1, dir.2).map_err(py_err)?;
            let m = AoaMeasurement::new(id, direction);
            match kappa {
                Some(k) => m.with_concentration(k).map_err(py_err),
                None => Ok(m),
            }
        })
        .collect()
}

fn to_test_points(points: Vec<(String, Triple)>) -> Vec<TestPoint> {
    points
        .into_iter()
        .map(|(label, p)| TestPoint {
            label,
            position: point(p),
        })
        .collect()
}

fn parse_algorithm(name: &str) -> PyResult<Algorithm> {
    name.parse().map_err(py_err)
}

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// A deployment: locators, the range noise model, and world bounds.
#[pyclass(frozen, module = "locfuse_py")]
pub struct Scene {
    inner: CoreScene,
}

#[pymethods]
impl Scene {
    /// The scene's JSON representation.
    fn to_json(&self) -> String {
        sim::scene_to_json(&self.inner)
    }

    /// Range-locator ids and positions as `(id, (x, y, z))`.
    fn toa_locators(&self) -> Vec<(String, Triple)> {
        self.inner
            .toa_locators
            .iter()
            .map(|l| (l.id.clone(), (l.position.x, l.position.y, l.position.z)))
            .collect()
    }

    /// Direction-locator ids, positions, yaw/pitch/roll, and concentration.
    fn aoa_locators(&self) -> Vec<(String, Triple, Triple, f64)> {
        self.inner
            .aoa_locators
            .iter()
            .map(|l| {
                let [yaw, pitch, roll] = l.yaw_pitch_roll_rad();
                (
                    l.id.clone(),
                    (l.position.x, l.position.y, l.position.z),
                    (yaw, pitch, roll),
                    l.concentration,
                )
            })
            .collect()
    }

    /// World bounds as `((min_x, min_y, min_z), (max_x, max_y, max_z))`.
    fn bounds(&self) -> (Triple, Triple) {
        let b = &self.inner.bounds;
        (
            (b.min.x, b.min.y, b.min.z),
            (b.max.x, b.max.y, b.max.z),
        )
    }

    fn __repr__(&self) -> String {
        format!(
            "Scene({} ToA, {} AoA locators)",
            self.inner.toa_locators.len(),
            self.inner.aoa_locators.len()
        )
    }
}

/// One position fix.
#[pyclass(frozen, get_all, module = "locfuse_py")]
pub struct Estimate {
    /// Estimated position `(x, y, z)` in metres.
    position: Triple,
    /// Estimated transmit offset in metres; `None` for direction-only fixes.
    tau_m: Option<f64>,
    /// Objective value at the estimate.
    objective: f64,
    /// Accepted ascent steps spent on the winning start.
    iterations: usize,
    converged: bool,
    /// Which start won: 0 is the box center, then corners, then seeded.
    start_index: usize,
}

impl Estimate {
    fn from_core(e: locfuse::joint::Estimate) -> Self {
        Estimate {
            position: (e.position.x, e.position.y, e.position.z),
            tau_m: e.transmit_time.map(|t| t.offset_m),
            objective: e.objective,
            iterations: e.iterations,
            converged: e.converged,
            start_index: e.start_index,
        }
    }
}

#[pymethods]
impl Estimate {
    fn __repr__(&self) -> String {
        format!(
            "Estimate(position=({:.3}, {:.3}, {:.3}), converged={})",
            self.position.0, self.position.1, self.position.2, self.converged
        )
    }
}

/// Error statistics over a batch of horizontal errors.
#[pyclass(frozen, get_all, module = "locfuse_py")]
pub struct ErrorStats {
    mean_m: f64,
    rms_m: f64,
    p50_m: f64,
    p90_m: f64,
    count: u64,
}

impl ErrorStats {
    fn from_core(s: harness::ErrorStats) -> Self {
        ErrorStats {
            mean_m: s.mean_m,
            rms_m: s.rms_m,
            p50_m: s.p50_m,
            p90_m: s.p90_m,
            count: s.count,
        }
    }
}

#[pymethods]
impl ErrorStats {
    fn __repr__(&self) -> String {
        format!(
            "ErrorStats(mean={:.3} m, p50={:.3} m, p90={:.3} m, n={})",
            self.mean_m, self.p50_m, self.p90_m, self.count
        )
    }
}

/// One Monte-Carlo trial result.
#[pyclass(frozen, get_all, module = "locfuse_py")]
pub struct TrialRecord {
    tp_label: String,
    epoch: u64,
    algorithm: String,
    x_m: f64,
    y_m: f64,
    z_m: f64,
    tau_m: Option<f64>,
    objective: f64,
    converged: bool,
    iterations: u64,
    start_index: u64,
    horiz_err_m: f64,
}

impl TrialRecord {
    fn from_core(r: harness::TrialRecord) -> Self {
        TrialRecord {
            tp_label: r.tp_label,
            epoch: r.epoch,
            algorithm: r.algorithm.name().to_owned(),
            x_m: r.x_m,
            y_m: r.y_m,
            z_m: r.z_m,
            tau_m: r.tau_m,
            objective: r.objective,
            converged: r.converged,
            iterations: r.iterations,
            start_index: r.start_index,
            horiz_err_m: r.horiz_err_m,
        }
    }
}

#[pymethods]
impl TrialRecord {
    fn __repr__(&self) -> String {
        format!(
            "TrialRecord({} epoch {} {}: err={:.3} m)",
            self.tp_label, self.epoch, self.algorithm, self.horiz_err_m
        )
    }
}

/// Accuracy at one synchronization-error level.
#[pyclass(frozen, get_all, module = "locfuse_py")]
pub struct SweepRow {
    sync_std_m: f64,
    algorithm: String,
    mean_m: f64,
    rms_m: f64,
    p50_m: f64,
    p90_m: f64,
    count: u64,
}

#[pymethods]
impl SweepRow {
    fn __repr__(&self) -> String {
        format!(
            "SweepRow(eta={} m, {}: p90={:.3} m)",
            self.sync_std_m, self.algorithm, self.p90_m
        )
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// The built-in 20 m x 10 m hall with four corner locator pairs.
#[pyfunction]
fn arena_scene() -> Scene {
    Scene {
        inner: sim::arena_scene(),
    }
}

/// Parses a scene from its JSON representation.
#[pyfunction]
fn scene_from_json(text: &str) -> PyResult<Scene> {
    Ok(Scene {
        inner: sim::scene_from_json(text).map_err(py_err)?,
    })
}

/// The built-in 7 x 4 grid of test points as `(label, (x, y, z))`.
#[pyfunction]
fn default_test_points() -> Vec<(String, Triple)> {
    sim::default_test_points()
        .into_iter()
        .map(|tp| (tp.label, (tp.position.x, tp.position.y, tp.position.z)))
        .collect()
}

/// Synthesizes the full trial grid with the library's seeded per-epoch
/// streams (identical to the command-line `simulate`). Returns
/// `(tp_label, epoch, toa, aoa)` tuples where `toa` is `(id, range_m)` and
/// `aoa` is `(id, (ux, uy, uz), kappa)` in the locator's frame.
#[pyfunction]
#[pyo3(signature = (scene, test_points, trials, seed, sync_std_m = 0.0))]
fn synthesize_trials(
    scene: &Scene,
    test_points: Vec<(String, Triple)>,
    trials: usize,
    seed: u64,
    sync_std_m: f64,
) -> PyResult<Vec<EpochSet>> {
    let config = TrialConfig::new(to_test_points(test_points), trials, seed)
        .and_then(|c| c.with_sync_std_m(sync_std_m))
        .map_err(py_err)?;
    let sets = harness::synthesize_trials(&scene.inner, &config).map_err(py_err)?;
    Ok(sets
        .into_iter()
        .map(|set| {
            let toa = set
                .toa
                .into_iter()
                .map(|m| (m.locator_id, m.range_m))
                .collect();
            let aoa = set
                .aoa
                .into_iter()
                .map(|m| {
                    let d = m.direction;
                    let kappa = m.concentration_override.unwrap_or(f64::NAN);
                    (m.locator_id, (d.x(), d.y(), d.z()), kappa)
                })
                .collect();
            (set.tp_label, set.epoch, toa, aoa)
        })
        .collect())
}

#[allow(clippy::too_many_arguments)]
fn solver_config(
    scene: &CoreScene,
    starts: Option<usize>,
    max_iterations: Option<usize>,
    gradient_tolerance: Option<f64>,
    step_initial_m: Option<f64>,
    tau_bounds_m: Option<(f64, f64)>,
    fixed_z: Option<f64>,
    seed: Option<u64>,
) -> SolverConfig {
    let mut config = SolverConfig::for_scene(scene);
    if let Some(v) = starts {
        config.starts = v;
    }
    if let Some(v) = max_iterations {
        config.max_iterations = v;
    }
    if let Some(v) = gradient_tolerance {
        config.gradient_tolerance = v;
    }
    if let Some(v) = step_initial_m {
        config.step_initial_m = v;
    }
    if let Some(v) = tau_bounds_m {
        config.tau_bounds_m = v;
    }
    if let Some(v) = fixed_z {
        config.fixed_z = Some(v);
    }
    if let Some(v) = seed {
        config.seed = v;
    }
    config
}

/// Runs one estimator on one measurement set. `algorithm` is one of
/// `toa-nls`, `toa-map`, `aoa`, or `joint`; solver settings default to the
/// per-scene configuration.
#[pyfunction]
#[pyo3(signature = (scene, algorithm, toa, aoa, *, starts = None,
    max_iterations = None, gradient_tolerance = None, step_initial_m = None,
    tau_bounds_m = None, fixed_z = None, seed = None))]
#[allow(clippy::too_many_arguments)]
fn estimate(
    scene: &Scene,
    algorithm: &str,
    toa: Vec<ToaArg>,
    aoa: Vec<AoaArg>,
    starts: Option<usize>,
    max_iterations: Option<usize>,
    gradient_tolerance: Option<f64>,
    step_initial_m: Option<f64>,
    tau_bounds_m: Option<(f64, f64)>,
    fixed_z: Option<f64>,
    seed: Option<u64>,
) -> PyResult<Estimate> {
    let algorithm = parse_algorithm(algorithm)?;
    let config = solver_config(
        &scene.inner,
        starts,
        max_iterations,
        gradient_tolerance,
        step_initial_m,
        tau_bounds_m,
        fixed_z,
        seed,
    );
    let set = MeasurementSet {
        tp_label: String::new(),
        epoch: 0,
        toa: to_toa(toa),
        aoa: to_aoa(aoa)?,
    };
    let fix = harness::run_algorithm(&scene.inner, algorithm, &set, &config).map_err(py_err)?;
    Ok(Estimate::from_core(fix))
}

/// Joint log-likelihood of the measurements at a position and transmit
/// offset.
#[pyfunction]
fn log_likelihood(
    scene: &Scene,
    position: Triple,
    transmit_offset_m: f64,
    toa: Vec<ToaArg>,
    aoa: Vec<AoaArg>,
) -> PyResult<f64> {
    locfuse::joint::joint_log_likelihood(
        &scene.inner,
        &point(position),
        transmit_offset_m,
        &to_toa(toa),
        &to_aoa(aoa)?,
    )
    .map_err(py_err)
}

/// Gradient of the joint log-likelihood: `((d/dx, d/dy, d/dz), d/dtau)`.
#[pyfunction]
fn log_likelihood_gradient(
    scene: &Scene,
    position: Triple,
    transmit_offset_m: f64,
    toa: Vec<ToaArg>,
    aoa: Vec<AoaArg>,
) -> PyResult<(Triple, f64)> {
    let (gx, gtau) = locfuse::joint::joint_gradient(
        &scene.inner,
        &point(position),
        transmit_offset_m,
        &to_toa(toa),
        &to_aoa(aoa)?,
    )
    .map_err(py_err)?;
    Ok(((gx.x, gx.y, gx.z), gtau))
}

/// Euclidean error in the horizontal plane between two positions.
#[pyfunction]
fn horizontal_error(a: Triple, b: Triple) -> f64 {
    locfuse::geometry::horizontal_error(&point(a), &point(b))
}

/// Synthesizes and solves the full trial grid, running every requested
/// algorithm on identical measurements. `algorithms` defaults to all four.
#[pyfunction]
#[pyo3(signature = (scene, test_points, trials, seed, *, sync_std_m = 0.0,
    algorithms = None))]
fn run_monte_carlo(
    scene: &Scene,
    test_points: Vec<(String, Triple)>,
    trials: usize,
    seed: u64,
    sync_std_m: f64,
    algorithms: Option<Vec<String>>,
) -> PyResult<Vec<TrialRecord>> {
    let algorithms = match algorithms {
        Some(names) => names
            .iter()
            .map(|n| parse_algorithm(n))
            .collect::<PyResult<Vec<_>>>()?,
        None => Algorithm::ALL.to_vec(),
    };
    let config = TrialConfig::new(to_test_points(test_points), trials, seed)
        .and_then(|c| c.with_sync_std_m(sync_std_m))
        .map_err(py_err)?;
    let solver = SolverConfig::for_scene(&scene.inner);
    let records = harness::run_monte_carlo(&scene.inner, &config, &algorithms, &solver)
        .map_err(py_err)?;
    Ok(records.into_iter().map(TrialRecord::from_core).collect())
}

/// Mean, RMS, median, and 90th-percentile statistics of a list of errors.
#[pyfunction]
fn summarize(errors: Vec<f64>) -> PyResult<ErrorStats> {
    harness::summarize(&errors)
        .map(ErrorStats::from_core)
        .map_err(py_err)
}

/// Empirical CDF of a list of errors as `(error_m, fraction)` points.
#[pyfunction]
fn error_cdf(errors: Vec<f64>) -> PyResult<Vec<(f64, f64)>> {
    harness::error_cdf(&errors).map_err(py_err)
}

/// Reruns the trial grid at each synchronization level for the
/// synchronization-sensitive estimator and the joint estimator, with all
/// other randomness shared across levels.
#[pyfunction]
#[pyo3(signature = (scene, test_points, trials, seed, levels))]
fn sync_sweep(
    scene: &Scene,
    test_points: Vec<(String, Triple)>,
    trials: usize,
    seed: u64,
    levels: Vec<f64>,
) -> PyResult<Vec<SweepRow>> {
    let config =
        TrialConfig::new(to_test_points(test_points), trials, seed).map_err(py_err)?;
    let solver = SolverConfig::for_scene(&scene.inner);
    let rows = harness::sync_sweep(&scene.inner, &config, &levels, &solver).map_err(py_err)?;
    Ok(rows
        .into_iter()
        .map(|r| SweepRow {
            sync_std_m: r.sync_std_m,
            algorithm: r.algorithm.name().to_owned(),
            mean_m: r.mean_m,
            rms_m: r.rms_m,
            p50_m: r.p50_m,
            p90_m: r.p90_m,
            count: r.count,
        })
        .collect())
}

#[pymodule]
fn locfuse_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scene>()?;
    m.add_class::<Estimate>()?;
    m.add_class::<ErrorStats>()?;
    m.add_class::<TrialRecord>()?;
    m.add_class::<SweepRow>()?;
    m.add_function(wrap_pyfunction!(arena_scene, m)?)?;
    m.add_function(wrap_pyfunction!(scene_from_json, m)?)?;
    m.add_function(wrap_pyfunction!(default_test_points, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize_trials, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(log_likelihood, m)?)?;
    m.add_function(wrap_pyfunction!(log_likelihood_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(horizontal_error, m)?)?;
    m.add_function(wrap_pyfunction!(run_monte_carlo, m)?)?;
    m.add_function(wrap_pyfunction!(summarize, m)?)?;
    m.add_function(wrap_pyfunction!(error_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(sync_sweep, m)?)?;
    Ok(())
}
