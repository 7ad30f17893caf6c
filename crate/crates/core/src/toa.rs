//! Time-of-arrival measurements and their probabilistic range model.
//!
//! A range observation from locator `k` at `p_k` to a target at `x` is
//! `t_k = ‖p_k − x‖ + τ + γ_k + n_k` (all in metres): `τ` is the unknown
//! common transmit offset, `γ_k` a bias drawn from a per-locator Gaussian
//! mixture, and `n_k` zero-mean Gaussian receiver noise with variance `σ²`.
//! Marginalizing the bias folds `σ²` into each mixture component, so the
//! per-measurement likelihood stays a Gaussian mixture in the residual
//! `t_k − ‖p_k − x‖ − τ`.

use std::collections::BTreeMap;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::{Point3, ToaLocator, DEGENERACY_TOL_M};
use crate::joint::{Estimate, SolverConfig};
use crate::probability::GaussianMixture;

/// The common transmit-time offset, expressed as a range in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmitTime {
    pub offset_m: f64,
}

/// One range observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ToaMeasurement {
    pub locator_id: String,
    pub range_m: f64,
}

impl ToaMeasurement {
    pub fn new(locator_id: impl Into<String>, range_m: f64) -> Self {
        ToaMeasurement {
            locator_id: locator_id.into(),
            range_m,
        }
    }
}

/// The range error model: shared receiver-noise variance `σ²` plus a bias
/// mixture per locator (with a shared default for locators without one).
#[derive(Debug, Clone, PartialEq)]
pub struct ToaNoiseModel {
    sigma2_m2: f64,
    shared_bias: GaussianMixture,
    per_locator: BTreeMap<String, GaussianMixture>,
}

impl ToaNoiseModel {
    pub fn new(sigma2_m2: f64, shared_bias: GaussianMixture) -> Result<Self> {
        if !sigma2_m2.is_finite() || sigma2_m2 <= 0.0 {
            return Err(Error::invalid(format!(
                "receiver-noise variance must be positive and finite, got {sigma2_m2}"
            )));
        }
        Ok(ToaNoiseModel {
            sigma2_m2,
            shared_bias,
            per_locator: BTreeMap::new(),
        })
    }

    /// Overrides the bias mixture for one locator.
    pub fn with_locator_bias(mut self, locator_id: impl Into<String>, bias: GaussianMixture) -> Self {
        self.per_locator.insert(locator_id.into(), bias);
        self
    }

    pub fn sigma2_m2(&self) -> f64 {
        self.sigma2_m2
    }

    pub fn bias_for(&self, locator_id: &str) -> &GaussianMixture {
        self.per_locator.get(locator_id).unwrap_or(&self.shared_bias)
    }

    pub fn shared_bias(&self) -> &GaussianMixture {
        &self.shared_bias
    }

    pub fn locator_overrides(&self) -> impl Iterator<Item = (&str, &GaussianMixture)> {
        self.per_locator.iter().map(|(k, v)| (k.as_str(), v))
    }
}

// ---------------------------------------------------------------------------
// Likelihood kernels
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct BiasComp {
    mean: f64,
    inv_var: f64,
    /// `ln w − ½ ln 2π − ½ ln(σ̃² + σ²)`, precomputed per component.
    ln_coeff: f64,
}

/// One measurement resolved against the scene, with its mixture constants
/// precomputed so the solver's inner loop stays allocation-free.
#[derive(Debug, Clone)]
pub(crate) struct ToaTerm {
    position: Vector3<f64>,
    range_m: f64,
    comps: Vec<BiasComp>,
}

const LN_2PI: f64 = 1.8378770664093456;

pub(crate) fn toa_terms(
    locators: &[ToaLocator],
    noise: &ToaNoiseModel,
    measurements: &[ToaMeasurement],
) -> Result<Vec<ToaTerm>> {
    let by_id: BTreeMap<&str, &ToaLocator> =
        locators.iter().map(|l| (l.id.as_str(), l)).collect();
    measurements
        .iter()
        .map(|m| {
            let locator = by_id.get(m.locator_id.as_str()).ok_or(Error::UnknownLocator {
                id: m.locator_id.clone(),
            })?;
            let comps = noise
                .bias_for(&m.locator_id)
                .components()
                .iter()
                .map(|c| {
                    let var = c.std * c.std + noise.sigma2_m2;
                    BiasComp {
                        mean: c.mean,
                        inv_var: 1.0 / var,
                        ln_coeff: c.weight.ln() - 0.5 * LN_2PI - 0.5 * var.ln(),
                    }
                })
                .collect();
            Ok(ToaTerm {
                position: locator.position.vector(),
                range_m: m.range_m,
                comps,
            })
        })
        .collect()
}

/// Log-likelihood of one resolved measurement; `-inf` when `x` sits on the
/// locator (keeps grid scans and line searches total).
fn term_log_lik(term: &ToaTerm, x: &Vector3<f64>, tau: f64) -> f64 {
    let dist = (x - term.position).norm();
    if dist < DEGENERACY_TOL_M {
        return f64::NEG_INFINITY;
    }
    let resid = term.range_m - dist - tau;
    if let [c] = term.comps.as_slice() {
        let e = resid - c.mean;
        return c.ln_coeff - 0.5 * e * e * c.inv_var;
    }
    let mut max = f64::NEG_INFINITY;
    for c in &term.comps {
        let e = resid - c.mean;
        max = max.max(c.ln_coeff - 0.5 * e * e * c.inv_var);
    }
    let mut sum = 0.0;
    for c in &term.comps {
        let e = resid - c.mean;
        sum += (c.ln_coeff - 0.5 * e * e * c.inv_var - max).exp();
    }
    max + sum.ln()
}

pub(crate) fn toa_ll_terms(terms: &[ToaTerm], x: &Vector3<f64>, tau: f64) -> f64 {
    terms.iter().map(|t| term_log_lik(t, x, tau)).sum()
}

/// Gradient of [`toa_ll_terms`] in `(x, τ)`. Degenerate terms contribute
/// nothing (the objective is `-inf` there and the solver never accepts it).
pub(crate) fn toa_grad_terms(
    terms: &[ToaTerm],
    x: &Vector3<f64>,
    tau: f64,
) -> (Vector3<f64>, f64) {
    let mut gx = Vector3::zeros();
    let mut gtau = 0.0;
    for term in terms {
        let offset = x - term.position;
        let dist = offset.norm();
        if dist < DEGENERACY_TOL_M {
            continue;
        }
        let resid = term.range_m - dist - tau;
        let ll = term_log_lik(term, x, tau);
        // s = Σᵢ rᵢ eᵢ/varᵢ with responsibilities rᵢ; then ∂L/∂τ = s and
        // ∂L/∂x = s (x − p)/d, because ∂resid/∂x = −(x − p)/d.
        let mut s = 0.0;
        for c in &term.comps {
            let e = resid - c.mean;
            let r = (c.ln_coeff - 0.5 * e * e * c.inv_var - ll).exp();
            s += r * e * c.inv_var;
        }
        gtau += s;
        gx += s / dist * offset;
    }
    (gx, gtau)
}

/// Joint log-likelihood of a set of range measurements at position `x` and
/// transmit offset `tau` (metres).
pub fn toa_log_likelihood(
    locators: &[ToaLocator],
    noise: &ToaNoiseModel,
    measurements: &[ToaMeasurement],
    position: &Point3,
    transmit_offset_m: f64,
) -> Result<f64> {
    if measurements.is_empty() {
        return Err(Error::EmptyMeasurements {
            estimator: "toa_log_likelihood",
        });
    }
    check_degenerate(locators, measurements, position)?;
    let terms = toa_terms(locators, noise, measurements)?;
    Ok(toa_ll_terms(&terms, &position.vector(), transmit_offset_m))
}

pub(crate) fn check_degenerate(
    locators: &[ToaLocator],
    measurements: &[ToaMeasurement],
    position: &Point3,
) -> Result<()> {
    for m in measurements {
        if let Some(l) = locators.iter().find(|l| l.id == m.locator_id) {
            if l.position.distance(position) < DEGENERACY_TOL_M {
                return Err(Error::DegeneratePosition {
                    id: l.id.clone(),
                    tolerance_m: DEGENERACY_TOL_M,
                });
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

/// Resolved anchor/range pairs for the least-squares objective.
pub(crate) fn range_terms(
    locators: &[ToaLocator],
    measurements: &[ToaMeasurement],
) -> Result<Vec<(Vector3<f64>, f64)>> {
    let by_id: BTreeMap<&str, &ToaLocator> =
        locators.iter().map(|l| (l.id.as_str(), l)).collect();
    measurements
        .iter()
        .map(|m| {
            let locator = by_id.get(m.locator_id.as_str()).ok_or(Error::UnknownLocator {
                id: m.locator_id.clone(),
            })?;
            Ok((locator.position.vector(), m.range_m))
        })
        .collect()
}

/// Negated sum of squared range residuals: the NLS objective in maximization
/// form, `−Σ (‖p_k − x‖ + τ − t_k)²`.
pub(crate) fn nls_objective(terms: &[(Vector3<f64>, f64)], x: &Vector3<f64>, tau: f64) -> f64 {
    -terms
        .iter()
        .map(|(p, t)| {
            let r = (x - p).norm() + tau - t;
            r * r
        })
        .sum::<f64>()
}

pub(crate) fn nls_gradient(
    terms: &[(Vector3<f64>, f64)],
    x: &Vector3<f64>,
    tau: f64,
) -> (Vector3<f64>, f64) {
    let mut gx = Vector3::zeros();
    let mut gtau = 0.0;
    for (p, t) in terms {
        let offset = x - p;
        let dist = offset.norm();
        let r = dist + tau - t;
        gtau -= 2.0 * r;
        if dist >= DEGENERACY_TOL_M {
            gx -= 2.0 * r / dist * offset;
        }
    }
    (gx, gtau)
}

/// Ranges alone must pin down four unknowns (x and τ), or three when z is
/// already fixed.
pub(crate) fn require_toa_count(
    estimator: &'static str,
    got: usize,
    config: &SolverConfig,
) -> Result<()> {
    let needed = if config.fixed_z.is_some() { 3 } else { 4 };
    if got < needed {
        return Err(Error::InsufficientMeasurements {
            estimator,
            needed,
            got,
        });
    }
    Ok(())
}

/// Least-squares-optimal transmit offset at a fixed position: the mean
/// range residual, clamped to the configured interval.
fn profiled_tau(terms: &[(Vector3<f64>, f64)], x: &Vector3<f64>, bounds: (f64, f64)) -> f64 {
    let mean = terms.iter().map(|(p, t)| t - (x - p).norm()).sum::<f64>() / terms.len() as f64;
    mean.clamp(bounds.0, bounds.1)
}

/// Nonlinear least-squares position and transmit-offset estimate: minimizes
/// `Σ (‖p_k − x‖ + τ − t_k)²` over the configured box.
///
/// The offset never appears as a search variable: at any position the
/// optimal τ is the mean residual in closed form, so the solver walks over
/// positions only and the reported offset is the profile optimum at the
/// winning position. The profiled x-gradient is just the partial x-gradient
/// evaluated at (x, τ*(x)) — the τ-partial vanishes at the unclamped mean,
/// and a clamped τ* is locally constant in x.
pub fn nls_estimate(
    locators: &[ToaLocator],
    measurements: &[ToaMeasurement],
    config: &SolverConfig,
) -> Result<Estimate> {
    if measurements.is_empty() {
        return Err(Error::EmptyMeasurements {
            estimator: "nls_estimate",
        });
    }
    require_toa_count("nls_estimate", measurements.len(), config)?;
    let terms = range_terms(locators, measurements)?;
    let tau_bounds = config.tau_bounds_m;
    let obj_terms = terms.clone();
    let grad_terms = terms.clone();
    let mut estimate = crate::joint::solve_position_only(
        config,
        move |x| {
            let tau = profiled_tau(&obj_terms, x, tau_bounds);
            nls_objective(&obj_terms, x, tau)
        },
        move |x| {
            let tau = profiled_tau(&grad_terms, x, tau_bounds);
            nls_gradient(&grad_terms, x, tau).0
        },
    )?;
    estimate.transmit_time = Some(TransmitTime {
        offset_m: profiled_tau(&terms, &estimate.position.vector(), tau_bounds),
    });
    Ok(estimate)
}

/// Maximum-a-posteriori position and transmit-offset estimate under the
/// mixture range model: maximizes [`toa_log_likelihood`].
pub fn map_toa_estimate(
    locators: &[ToaLocator],
    noise: &ToaNoiseModel,
    measurements: &[ToaMeasurement],
    config: &SolverConfig,
) -> Result<Estimate> {
    if measurements.is_empty() {
        return Err(Error::EmptyMeasurements {
            estimator: "map_toa_estimate",
        });
    }
    require_toa_count("map_toa_estimate", measurements.len(), config)?;
    crate::joint::estimate_from_parts(locators, noise, measurements, &[], &[], config)
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::probability::GaussianComponent;
    use approx::assert_relative_eq;

    fn mixture(parts: &[(f64, f64, f64)]) -> GaussianMixture {
        GaussianMixture::new(
            parts
                .iter()
                .map(|&(weight, mean, std)| GaussianComponent { weight, mean, std })
                .collect(),
        )
        .unwrap()
    }

    fn corner_locators() -> Vec<ToaLocator> {
        vec![
            ToaLocator::new("k1", Point3::new(0.0, 0.0, 7.3)),
            ToaLocator::new("k2", Point3::new(20.0, 0.0, 7.3)),
            ToaLocator::new("k3", Point3::new(0.0, 10.0, 7.3)),
            ToaLocator::new("k4", Point3::new(20.0, 10.0, 7.3)),
        ]
    }

    #[test]
    fn single_gaussian_term_matches_the_closed_form() {
        let locators = vec![ToaLocator::new("a", Point3::new(0.0, 0.0, 0.0))];
        let noise = ToaNoiseModel::new(0.1, GaussianMixture::single(0.5, 0.6).unwrap()).unwrap();
        let meas = vec![ToaMeasurement::new("a", 7.2)];
        let x = Point3::new(3.0, 4.0, 0.0);
        // d = 5, residual e = 7.2 − 5 − 2 − 0.5 = −0.3, var = 0.36 + 0.1.
        let var: f64 = 0.46;
        let expected = -0.5 * (2.0 * std::f64::consts::PI * var).ln() - 0.5 * 0.09 / var;
        let got = toa_log_likelihood(&locators, &noise, &meas, &x, 2.0).unwrap();
        assert_relative_eq!(got, expected, epsilon = 1e-14);
    }

    #[test]
    fn four_locator_mixture_reference_value() {
        // Independently computed with 50-digit arithmetic and frozen here.
        let locators = corner_locators();
        let noise = ToaNoiseModel::new(0.09, GaussianMixture::single(0.0, 1.0).unwrap())
            .unwrap()
            .with_locator_bias("k1", mixture(&[(0.6, 0.0, 0.5), (0.4, 2.0, 1.2)]))
            .with_locator_bias("k2", mixture(&[(0.3, -0.5, 0.8), (0.7, 1.0, 0.4)]))
            .with_locator_bias("k3", mixture(&[(0.5, 0.2, 0.3), (0.5, 3.0, 1.5)]))
            .with_locator_bias("k4", mixture(&[(0.8, 0.0, 1.0), (0.2, 5.0, 2.0)]));
        let x = Point3::new(7.2, 3.9, 1.4);
        let tau = 4.25;
        let deltas = [0.7, -0.3, 2.1, 0.05];
        let meas: Vec<ToaMeasurement> = locators
            .iter()
            .zip(deltas)
            .map(|(l, d)| ToaMeasurement::new(l.id.clone(), l.position.distance(&x) + tau + d))
            .collect();
        let got = toa_log_likelihood(&locators, &noise, &meas, &x, tau).unwrap();
        assert_relative_eq!(got, -6.5470374798257387014, epsilon = 1e-9);
    }

    #[test]
    fn likelihood_is_invariant_to_a_common_time_shift() {
        let locators = corner_locators();
        let noise = ToaNoiseModel::new(0.05, mixture(&[(0.7, 0.1, 0.4), (0.3, 1.5, 0.9)])).unwrap();
        let x = Point3::new(12.0, 3.0, 1.0);
        let meas: Vec<ToaMeasurement> = locators
            .iter()
            .enumerate()
            .map(|(i, l)| {
                ToaMeasurement::new(l.id.clone(), l.position.distance(&x) + 2.0 + 0.3 * i as f64)
            })
            .collect();
        let base = toa_log_likelihood(&locators, &noise, &meas, &x, 2.0).unwrap();
        let shift = 11.5;
        let shifted: Vec<ToaMeasurement> = meas
            .iter()
            .map(|m| ToaMeasurement::new(m.locator_id.clone(), m.range_m + shift))
            .collect();
        let moved = toa_log_likelihood(&locators, &noise, &shifted, &x, 2.0 + shift).unwrap();
        assert_relative_eq!(base, moved, epsilon = 1e-12);
    }

    #[test]
    fn likelihood_is_invariant_to_measurement_order() {
        let locators = corner_locators();
        let noise = ToaNoiseModel::new(0.05, mixture(&[(0.5, 0.0, 0.5), (0.5, 2.0, 1.0)])).unwrap();
        let x = Point3::new(5.0, 8.0, 1.5);
        let meas: Vec<ToaMeasurement> = locators
            .iter()
            .enumerate()
            .map(|(i, l)| {
                ToaMeasurement::new(l.id.clone(), l.position.distance(&x) + 1.0 + 0.2 * i as f64)
            })
            .collect();
        let forward = toa_log_likelihood(&locators, &noise, &meas, &x, 1.0).unwrap();
        let mut reversed = meas.clone();
        reversed.reverse();
        let backward = toa_log_likelihood(&locators, &noise, &reversed, &x, 1.0).unwrap();
        assert_relative_eq!(forward, backward, epsilon = 1e-13);
    }

    #[test]
    fn rejects_empty_unknown_and_degenerate_inputs() {
        let locators = corner_locators();
        let noise = ToaNoiseModel::new(0.1, GaussianMixture::single(0.0, 1.0).unwrap()).unwrap();
        let x = Point3::new(1.0, 1.0, 1.0);
        assert!(matches!(
            toa_log_likelihood(&locators, &noise, &[], &x, 0.0),
            Err(Error::EmptyMeasurements { .. })
        ));
        let bad = vec![ToaMeasurement::new("nope", 5.0)];
        assert!(matches!(
            toa_log_likelihood(&locators, &noise, &bad, &x, 0.0),
            Err(Error::UnknownLocator { .. })
        ));
        let meas = vec![ToaMeasurement::new("k1", 5.0)];
        let on_top = Point3::new(0.0, 0.0, 7.3);
        assert!(matches!(
            toa_log_likelihood(&locators, &noise, &meas, &on_top, 0.0),
            Err(Error::DegeneratePosition { .. })
        ));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let locators = corner_locators();
        let noise = ToaNoiseModel::new(0.07, mixture(&[(0.6, 0.3, 0.5), (0.4, 1.8, 1.1)]))
            .unwrap()
            .with_locator_bias("k2", mixture(&[(1.0, -0.4, 0.7)]));
        let meas = vec![
            ToaMeasurement::new("k1", 11.0),
            ToaMeasurement::new("k2", 14.5),
            ToaMeasurement::new("k3", 12.25),
            ToaMeasurement::new("k4", 16.0),
        ];
        let terms = toa_terms(&locators, &noise, &meas).unwrap();
        let points = [
            (Vector3::new(4.0, 3.0, 1.0), 1.2),
            (Vector3::new(15.0, 7.5, 2.2), -0.7),
            (Vector3::new(9.9, 5.1, 0.4), 3.3),
        ];
        let h = 1e-6;
        for (x, tau) in points {
            let (gx, gtau) = toa_grad_terms(&terms, &x, tau);
            for axis in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[axis] += h;
                xm[axis] -= h;
                let fd =
                    (toa_ll_terms(&terms, &xp, tau) - toa_ll_terms(&terms, &xm, tau)) / (2.0 * h);
                assert_relative_eq!(gx[axis], fd, epsilon = 1e-6, max_relative = 1e-6);
            }
            let fd_tau = (toa_ll_terms(&terms, &x, tau + h) - toa_ll_terms(&terms, &x, tau - h))
                / (2.0 * h);
            assert_relative_eq!(gtau, fd_tau, epsilon = 1e-6, max_relative = 1e-6);
        }
    }

    #[test]
    fn nls_objective_and_gradient_agree() {
        let locators = corner_locators();
        let meas = vec![
            ToaMeasurement::new("k1", 11.0),
            ToaMeasurement::new("k2", 14.5),
            ToaMeasurement::new("k3", 12.25),
            ToaMeasurement::new("k4", 16.0),
        ];
        let terms = range_terms(&locators, &meas).unwrap();
        let x = Vector3::new(6.5, 2.5, 1.1);
        let tau = 0.8;
        let (gx, gtau) = nls_gradient(&terms, &x, tau);
        let h = 1e-6;
        for axis in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[axis] += h;
            xm[axis] -= h;
            let fd = (nls_objective(&terms, &xp, tau) - nls_objective(&terms, &xm, tau)) / (2.0 * h);
            assert_relative_eq!(gx[axis], fd, epsilon = 1e-5, max_relative = 1e-6);
        }
        let fd_tau =
            (nls_objective(&terms, &x, tau + h) - nls_objective(&terms, &x, tau - h)) / (2.0 * h);
        assert_relative_eq!(gtau, fd_tau, epsilon = 1e-5, max_relative = 1e-6);
    }

    #[test]
    fn noise_model_validates_and_resolves_overrides() {
        assert!(ToaNoiseModel::new(0.0, GaussianMixture::single(0.0, 1.0).unwrap()).is_err());
        assert!(ToaNoiseModel::new(-0.1, GaussianMixture::single(0.0, 1.0).unwrap()).is_err());
        let noise = ToaNoiseModel::new(0.1, GaussianMixture::single(0.0, 1.0).unwrap())
            .unwrap()
            .with_locator_bias("k2", GaussianMixture::single(3.0, 0.5).unwrap());
        assert_eq!(noise.bias_for("k1").components()[0].mean, 0.0);
        assert_eq!(noise.bias_for("k2").components()[0].mean, 3.0);
    }

    fn solver_config() -> SolverConfig {
        SolverConfig::new(
            crate::geometry::Aabb::new(
                Point3::new(-2.0, -2.0, -2.0),
                Point3::new(22.0, 12.0, 9.3),
            )
            .unwrap(),
        )
    }

    fn exact_measurements(locators: &[ToaLocator], x: &Point3, tau: f64) -> Vec<ToaMeasurement> {
        locators
            .iter()
            .map(|l| ToaMeasurement::new(l.id.clone(), l.position.distance(x) + tau))
            .collect()
    }

    #[test]
    fn nls_recovers_a_noiseless_target_and_offset() {
        let locators = corner_locators();
        let truth = Point3::new(6.0, 4.0, 1.0);
        let tau = 3.0;
        let meas = exact_measurements(&locators, &truth, tau);
        let est = nls_estimate(&locators, &meas, &solver_config()).unwrap();
        assert!(est.converged);
        assert!(
            est.position.distance(&truth) < 1e-6,
            "distance {:e}",
            est.position.distance(&truth)
        );
        assert!((est.transmit_time.unwrap().offset_m - tau).abs() < 1e-6);
    }

    #[test]
    fn a_common_shift_moves_only_the_offset_estimate() {
        let locators = corner_locators();
        let truth = Point3::new(14.0, 7.0, 1.2);
        let tau = 1.5;
        let mut meas = exact_measurements(&locators, &truth, tau);
        // Perturb slightly so the optimum is not an exact-fit special case.
        for (i, m) in meas.iter_mut().enumerate() {
            m.range_m += [0.11, -0.07, 0.03, -0.09][i];
        }
        let base = nls_estimate(&locators, &meas, &solver_config()).unwrap();
        let delta = 2.5;
        let shifted: Vec<ToaMeasurement> = meas
            .iter()
            .map(|m| ToaMeasurement::new(m.locator_id.clone(), m.range_m + delta))
            .collect();
        let moved = nls_estimate(&locators, &shifted, &solver_config()).unwrap();
        assert!(
            base.position.distance(&moved.position) < 1e-9,
            "position drifted {:e}",
            base.position.distance(&moved.position)
        );
        let tau_base = base.transmit_time.unwrap().offset_m;
        let tau_moved = moved.transmit_time.unwrap().offset_m;
        assert!((tau_moved - tau_base - delta).abs() < 1e-9);
    }

    #[test]
    fn map_matches_nls_on_noiseless_single_gaussian_data() {
        let locators = corner_locators();
        let noise = ToaNoiseModel::new(1e-4, GaussianMixture::single(0.0, 0.01).unwrap()).unwrap();
        let truth = Point3::new(11.0, 8.0, 0.8);
        let tau = -2.0;
        let meas = exact_measurements(&locators, &truth, tau);
        let config = solver_config();
        let nls = nls_estimate(&locators, &meas, &config).unwrap();
        let map = map_toa_estimate(&locators, &noise, &meas, &config).unwrap();
        assert!(nls.position.distance(&map.position) < 1e-6);
        assert!(map.position.distance(&truth) < 1e-6);
        let tau_gap =
            (nls.transmit_time.unwrap().offset_m - map.transmit_time.unwrap().offset_m).abs();
        assert!(tau_gap < 1e-6);
    }

    #[test]
    fn too_few_ranges_are_rejected_unless_z_is_fixed() {
        let locators = corner_locators();
        let truth = Point3::new(6.0, 4.0, 1.0);
        let meas = exact_measurements(&locators, &truth, 0.5);
        let noise = ToaNoiseModel::new(0.1, GaussianMixture::single(0.0, 1.0).unwrap()).unwrap();
        let config = solver_config();
        assert!(matches!(
            nls_estimate(&locators, &meas[..3], &config),
            Err(Error::InsufficientMeasurements {
                needed: 4,
                got: 3,
                ..
            })
        ));
        assert!(matches!(
            map_toa_estimate(&locators, &noise, &meas[..3], &config),
            Err(Error::InsufficientMeasurements { .. })
        ));
        let mut fixed = config.clone();
        fixed.fixed_z = Some(1.0);
        let est = nls_estimate(&locators, &meas[..3], &fixed).unwrap();
        assert!(est.position.distance(&truth) < 1e-6);
        assert!(map_toa_estimate(&locators, &noise, &meas[..3], &fixed).is_ok());
    }

    #[test]
    fn profiled_gradient_matches_finite_differences_of_the_profile() {
        let locators = corner_locators();
        let meas = vec![
            ToaMeasurement::new("k1", 11.3),
            ToaMeasurement::new("k2", 14.1),
            ToaMeasurement::new("k3", 12.6),
            ToaMeasurement::new("k4", 15.8),
        ];
        let terms = range_terms(&locators, &meas).unwrap();
        let bounds = (-100.0, 100.0);
        let profile = |x: &Vector3<f64>| {
            let tau = profiled_tau(&terms, x, bounds);
            nls_objective(&terms, x, tau)
        };
        let x = Vector3::new(8.3, 6.1, 1.4);
        let tau = profiled_tau(&terms, &x, bounds);
        let (gx, _) = nls_gradient(&terms, &x, tau);
        let h = 1e-6;
        for axis in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[axis] += h;
            xm[axis] -= h;
            let fd = (profile(&xp) - profile(&xm)) / (2.0 * h);
            assert_relative_eq!(gx[axis], fd, epsilon = 1e-5, max_relative = 1e-6);
        }
    }
}
