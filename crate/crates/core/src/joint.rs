//! Fusion of ToA and AoA measurements into one posterior and its MAP
//! estimate.
//!
//! Ranges and directions are conditionally independent given the position,
//! so the joint log-likelihood is simply the sum of the two parts; the
//! transmit offset `τ` only enters through the ToA side. All estimators in
//! the crate funnel into the same multistart solve so that a joint problem
//! with one side empty degenerates *exactly* into the single-modality
//! estimator, starts and all.

use nalgebra::{DVector, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::aoa::{aoa_grad_terms, aoa_ll_terms, aoa_terms, AoaMeasurement};
use crate::error::{Error, Result};
use crate::geometry::{Aabb, AoaLocator, Point3, ToaLocator};
use crate::probability::GaussianMixture;
use crate::sim::Scene;
use crate::solver::{maximize, BoxBounds, EngineConfig};
use crate::toa::{
    toa_grad_terms, toa_ll_terms, toa_terms, ToaMeasurement, ToaNoiseModel, TransmitTime,
};

/// Everything the estimators need to know about the search: where to look,
/// how many starts to spread, and when to stop.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Box the position estimate is constrained to.
    pub position_bounds: Aabb,
    /// Interval the transmit offset (metres) is constrained to.
    pub tau_bounds_m: (f64, f64),
    /// Pins the z coordinate when the target height is known.
    pub fixed_z: Option<f64>,
    /// Total number of starts: box center, then the corners, then
    /// seeded-uniform random points.
    pub starts: usize,
    pub max_iterations: usize,
    /// Sup-norm of the projected gradient below which a run is converged.
    pub gradient_tolerance: f64,
    /// First trial step length (metres) of each ascent run.
    pub step_initial_m: f64,
    /// Seed for the random starts; fixed seed, fixed estimate.
    pub seed: u64,
}

impl SolverConfig {
    pub fn new(position_bounds: Aabb) -> Self {
        SolverConfig {
            position_bounds,
            tau_bounds_m: (-100.0, 100.0),
            fixed_z: None,
            starts: 16,
            max_iterations: 200,
            gradient_tolerance: 1e-8,
            step_initial_m: 1.0,
            seed: 0,
        }
    }

    /// Defaults for a scene: the world box inflated by 2 m on every side.
    pub fn for_scene(scene: &Scene) -> Self {
        SolverConfig::new(scene.bounds.inflate(2.0))
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.starts == 0 {
            return Err(Error::invalid("solver needs at least one start"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("solver needs at least one iteration"));
        }
        if !self.gradient_tolerance.is_finite() || self.gradient_tolerance <= 0.0 {
            return Err(Error::invalid(format!(
                "gradient tolerance must be positive and finite, got {}",
                self.gradient_tolerance
            )));
        }
        if !self.step_initial_m.is_finite() || self.step_initial_m <= 0.0 {
            return Err(Error::invalid(format!(
                "initial step must be positive and finite, got {}",
                self.step_initial_m
            )));
        }
        let (lo, hi) = self.tau_bounds_m;
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(Error::invalid(format!(
                "transmit-offset bounds [{lo}, {hi}] are not a valid interval"
            )));
        }
        if let Some(z) = self.fixed_z {
            if !z.is_finite() {
                return Err(Error::invalid("fixed z must be finite"));
            }
        }
        Ok(())
    }

    /// Position box with the z interval collapsed when z is pinned.
    fn effective_bounds(&self) -> Aabb {
        match self.fixed_z {
            None => self.position_bounds,
            Some(z) => Aabb {
                min: Point3::new(self.position_bounds.min.x, self.position_bounds.min.y, z),
                max: Point3::new(self.position_bounds.max.x, self.position_bounds.max.y, z),
            },
        }
    }

    fn engine(&self) -> EngineConfig {
        EngineConfig {
            max_iterations: self.max_iterations,
            gradient_tolerance: self.gradient_tolerance,
            step_initial: self.step_initial_m,
        }
    }
}

/// A point estimate with its solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub position: Point3,
    /// Present for estimators that solve for the transmit offset.
    pub transmit_time: Option<TransmitTime>,
    /// Objective value at the estimate — finite whenever the run converged.
    /// This is a log-likelihood for every estimator except least squares,
    /// where it is the negated residual sum of squares.
    pub objective: f64,
    /// Accepted ascent steps spent on the winning start.
    pub iterations: usize,
    pub converged: bool,
    /// Which start won: 0 is the box center, 1.. the corners, then the
    /// seeded random points.
    pub start_index: usize,
    /// Objective after every accepted step of the winning run; never
    /// decreasing.
    pub trace: Vec<f64>,
}

// ---------------------------------------------------------------------------
// Likelihood and gradient
// ---------------------------------------------------------------------------

/// `ln p(toa, aoa | x, τ)`: the ToA and AoA log-likelihoods added together.
/// Either measurement list may be empty, but not both.
pub fn joint_log_likelihood(
    scene: &Scene,
    position: &Point3,
    transmit_offset_m: f64,
    toa_measurements: &[ToaMeasurement],
    aoa_measurements: &[AoaMeasurement],
) -> Result<f64> {
    if toa_measurements.is_empty() && aoa_measurements.is_empty() {
        return Err(Error::EmptyMeasurements {
            estimator: "joint_log_likelihood",
        });
    }
    crate::toa::check_degenerate(&scene.toa_locators, toa_measurements, position)?;
    crate::aoa::check_degenerate(&scene.aoa_locators, aoa_measurements, position)?;
    let toa = toa_terms(&scene.toa_locators, &scene.toa_noise, toa_measurements)?;
    let aoa = aoa_terms(&scene.aoa_locators, aoa_measurements)?;
    let x = position.vector();
    Ok(toa_ll_terms(&toa, &x, transmit_offset_m) + aoa_ll_terms(&aoa, &x))
}

/// Gradient of [`joint_log_likelihood`] in `(x, τ)`. The τ component comes
/// from the ToA side alone.
pub fn joint_gradient(
    scene: &Scene,
    position: &Point3,
    transmit_offset_m: f64,
    toa_measurements: &[ToaMeasurement],
    aoa_measurements: &[AoaMeasurement],
) -> Result<(Vector3<f64>, f64)> {
    if toa_measurements.is_empty() && aoa_measurements.is_empty() {
        return Err(Error::EmptyMeasurements {
            estimator: "joint_gradient",
        });
    }
    crate::toa::check_degenerate(&scene.toa_locators, toa_measurements, position)?;
    crate::aoa::check_degenerate(&scene.aoa_locators, aoa_measurements, position)?;
    let toa = toa_terms(&scene.toa_locators, &scene.toa_noise, toa_measurements)?;
    let aoa = aoa_terms(&scene.aoa_locators, aoa_measurements)?;
    let x = position.vector();
    let (gx_toa, gtau) = toa_grad_terms(&toa, &x, transmit_offset_m);
    let gx = gx_toa + aoa_grad_terms(&aoa, &x);
    Ok((gx, gtau))
}

// ---------------------------------------------------------------------------
// Estimation
// ---------------------------------------------------------------------------

/// MAP position (and transmit offset, when ranges are present) under the
/// joint model. With no AoA measurements this *is* the ToA MAP estimator;
/// with no ToA measurements it is the AoA estimator. The measurement set
/// must identify the position: at least four ranges (three with `fixed_z`),
/// or at least two bearings, or at least one of each.
pub fn joint_estimate(
    scene: &Scene,
    toa_measurements: &[ToaMeasurement],
    aoa_measurements: &[AoaMeasurement],
    config: &SolverConfig,
) -> Result<Estimate> {
    if toa_measurements.is_empty() && aoa_measurements.is_empty() {
        return Err(Error::EmptyMeasurements {
            estimator: "joint_estimate",
        });
    }
    if aoa_measurements.is_empty() {
        crate::toa::require_toa_count("joint_estimate", toa_measurements.len(), config)?;
    } else if toa_measurements.is_empty() && aoa_measurements.len() < 2 {
        return Err(Error::InsufficientMeasurements {
            estimator: "joint_estimate",
            needed: 2,
            got: aoa_measurements.len(),
        });
    }
    estimate_from_parts(
        &scene.toa_locators,
        &scene.toa_noise,
        toa_measurements,
        &scene.aoa_locators,
        aoa_measurements,
        config,
    )
}

/// Shared maximization core behind the ToA MAP, AoA, and joint estimators:
/// callers have already enforced their own identifiability preconditions.
pub(crate) fn estimate_from_parts(
    toa_locators: &[ToaLocator],
    noise: &ToaNoiseModel,
    toa_measurements: &[ToaMeasurement],
    aoa_locators: &[AoaLocator],
    aoa_measurements: &[AoaMeasurement],
    config: &SolverConfig,
) -> Result<Estimate> {
    if toa_measurements.is_empty() && aoa_measurements.is_empty() {
        return Err(Error::EmptyMeasurements {
            estimator: "joint_estimate",
        });
    }
    let toa = toa_terms(toa_locators, noise, toa_measurements)?;
    let aoa = aoa_terms(aoa_locators, aoa_measurements)?;

    if toa.is_empty() {
        let f = |x: &Vector3<f64>| aoa_ll_terms(&aoa, x);
        let g = |x: &Vector3<f64>| aoa_grad_terms(&aoa, x);
        return solve_position_only(config, f, g);
    }

    let ranges = crate::toa::range_terms(toa_locators, toa_measurements)?;
    let f = |x: &Vector3<f64>, tau: f64| toa_ll_terms(&toa, x, tau) + aoa_ll_terms(&aoa, x);
    let g = |x: &Vector3<f64>, tau: f64| {
        let (gx, gtau) = toa_grad_terms(&toa, x, tau);
        (gx + aoa_grad_terms(&aoa, x), gtau)
    };
    solve_with_tau(config, &ranges, f, g)
}

/// Position starts shared by every estimator: center, corners, then
/// seeded-uniform points, truncated to `config.starts`.
fn position_starts(config: &SolverConfig) -> Vec<Vector3<f64>> {
    let bounds = config.effective_bounds();
    let mut starts: Vec<Vector3<f64>> = Vec::with_capacity(config.starts);
    starts.push(bounds.center().vector());
    for corner in bounds.corners() {
        if starts.len() == config.starts {
            return starts;
        }
        let v = corner.vector();
        if !starts.contains(&v) {
            starts.push(v);
        }
    }
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    while starts.len() < config.starts {
        let sample = |lo: f64, hi: f64, rng: &mut ChaCha12Rng| {
            if hi > lo {
                rng.random_range(lo..hi)
            } else {
                lo
            }
        };
        let x = sample(bounds.min.x, bounds.max.x, &mut rng);
        let y = sample(bounds.min.y, bounds.max.y, &mut rng);
        let z = sample(bounds.min.z, bounds.max.z, &mut rng);
        starts.push(Vector3::new(x, y, z));
    }
    starts
}

/// Median of `t_k − ‖x₀ − p_k‖`: the least-squares-optimal transmit offset
/// at the start position, robustified against mixture outliers.
fn tau_start(ranges: &[(Vector3<f64>, f64)], x0: &Vector3<f64>, config: &SolverConfig) -> f64 {
    let mut residuals: Vec<f64> = ranges
        .iter()
        .map(|(p, t)| t - (x0 - p).norm())
        .collect();
    residuals.sort_by(f64::total_cmp);
    let mid = residuals.len() / 2;
    let median = if residuals.len() % 2 == 1 {
        residuals[mid]
    } else {
        0.5 * (residuals[mid - 1] + residuals[mid])
    };
    median.clamp(config.tau_bounds_m.0, config.tau_bounds_m.1)
}

/// Multistart maximization over `(x, τ)`.
pub(crate) fn solve_with_tau<F, G>(
    config: &SolverConfig,
    ranges_for_tau0: &[(Vector3<f64>, f64)],
    f: F,
    g: G,
) -> Result<Estimate>
where
    F: Fn(&Vector3<f64>, f64) -> f64,
    G: Fn(&Vector3<f64>, f64) -> (Vector3<f64>, f64),
{
    config.validate()?;
    let bounds = config.effective_bounds();
    let starts: Vec<DVector<f64>> = position_starts(config)
        .into_iter()
        .map(|x0| {
            let tau0 = tau_start(ranges_for_tau0, &x0, config);
            DVector::from_vec(vec![x0.x, x0.y, x0.z, tau0])
        })
        .collect();
    let engine_bounds = BoxBounds {
        lower: DVector::from_vec(vec![
            bounds.min.x,
            bounds.min.y,
            bounds.min.z,
            config.tau_bounds_m.0,
        ]),
        upper: DVector::from_vec(vec![
            bounds.max.x,
            bounds.max.y,
            bounds.max.z,
            config.tau_bounds_m.1,
        ]),
    };
    let outcome = maximize(
        |z| f(&Vector3::new(z[0], z[1], z[2]), z[3]),
        |z| {
            let (gx, gtau) = g(&Vector3::new(z[0], z[1], z[2]), z[3]);
            DVector::from_vec(vec![gx.x, gx.y, gx.z, gtau])
        },
        &engine_bounds,
        &starts,
        &config.engine(),
    );
    Ok(Estimate {
        position: Point3::new(outcome.z[0], outcome.z[1], outcome.z[2]),
        transmit_time: Some(TransmitTime {
            offset_m: outcome.z[3],
        }),
        objective: outcome.value,
        iterations: outcome.iterations,
        converged: outcome.converged,
        start_index: outcome.start_index,
        trace: outcome.trace,
    })
}

/// Multistart maximization over position only (no transmit offset).
pub(crate) fn solve_position_only<F, G>(config: &SolverConfig, f: F, g: G) -> Result<Estimate>
where
    F: Fn(&Vector3<f64>) -> f64,
    G: Fn(&Vector3<f64>) -> Vector3<f64>,
{
    config.validate()?;
    let bounds = config.effective_bounds();
    let starts: Vec<DVector<f64>> = position_starts(config)
        .into_iter()
        .map(|x0| DVector::from_vec(vec![x0.x, x0.y, x0.z]))
        .collect();
    let engine_bounds = BoxBounds {
        lower: DVector::from_vec(vec![bounds.min.x, bounds.min.y, bounds.min.z]),
        upper: DVector::from_vec(vec![bounds.max.x, bounds.max.y, bounds.max.z]),
    };
    let outcome = maximize(
        |z| f(&Vector3::new(z[0], z[1], z[2])),
        |z| {
            let gx = g(&Vector3::new(z[0], z[1], z[2]));
            DVector::from_vec(vec![gx.x, gx.y, gx.z])
        },
        &engine_bounds,
        &starts,
        &config.engine(),
    );
    Ok(Estimate {
        position: Point3::new(outcome.z[0], outcome.z[1], outcome.z[2]),
        transmit_time: None,
        objective: outcome.value,
        iterations: outcome.iterations,
        converged: outcome.converged,
        start_index: outcome.start_index,
        trace: outcome.trace,
    })
}

/// A placeholder noise model for calls with no ToA measurements at all.
pub(crate) fn no_toa_noise() -> ToaNoiseModel {
    ToaNoiseModel::new(1.0, GaussianMixture::single(0.0, 1.0).expect("valid bias"))
        .expect("valid noise model")
}
