//! Angle-of-arrival measurements under the von Mises-Fisher error model.
//!
//! Locator `b` reports a unit direction `û_b` in its own frame. The model
//! says `û_b ~ vMF(u_b(x), κ_b)` with `u_b(x) = Ω_bᵀ (x − l_b)/‖x − l_b‖`,
//! so one measurement contributes
//! `ln c(κ_b) + κ_b û_bᵀ Ω_bᵀ (x − l_b)/‖x − l_b‖` to the log-likelihood.
//! Rotating `û_b` into the world frame once (`w_b = Ω_b û_b`) turns the data
//! term into a plain dot product with the world-frame direction to `x`.

use std::collections::BTreeMap;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{AoaLocator, Point3, UnitVec3, DEGENERACY_TOL_M};
use crate::joint::{Estimate, SolverConfig};
use crate::probability::vmf_ln_norm_const;

/// One direction observation, expressed in the reporting locator's frame.
#[derive(Debug, Clone, PartialEq)]
pub struct AoaMeasurement {
    pub locator_id: String,
    pub direction: UnitVec3,
    /// Per-measurement concentration for epochs whose angular quality
    /// differs from the locator's nominal κ; `None` falls back to the
    /// locator. Must be positive when present.
    pub concentration_override: Option<f64>,
}

impl AoaMeasurement {
    pub fn new(locator_id: impl Into<String>, direction: UnitVec3) -> Self {
        AoaMeasurement {
            locator_id: locator_id.into(),
            direction,
            concentration_override: None,
        }
    }

    pub fn with_concentration(mut self, kappa: f64) -> Result<Self> {
        if !kappa.is_finite() || kappa <= 0.0 {
            return Err(Error::invalid(format!(
                "AoA concentration override must be positive and finite, got {kappa}"
            )));
        }
        self.concentration_override = Some(kappa);
        Ok(self)
    }
}

/// One measurement resolved against the scene: the measured direction
/// already rotated into the world frame, plus the constants of its vMF term.
#[derive(Debug, Clone)]
pub(crate) struct AoaTerm {
    position: Vector3<f64>,
    world_dir: Vector3<f64>,
    kappa: f64,
    ln_norm: f64,
}

pub(crate) fn aoa_terms(
    locators: &[AoaLocator],
    measurements: &[AoaMeasurement],
) -> Result<Vec<AoaTerm>> {
    let by_id: BTreeMap<&str, &AoaLocator> =
        locators.iter().map(|l| (l.id.as_str(), l)).collect();
    measurements
        .iter()
        .map(|m| {
            let locator = by_id.get(m.locator_id.as_str()).ok_or(Error::UnknownLocator {
                id: m.locator_id.clone(),
            })?;
            let kappa = m.concentration_override.unwrap_or(locator.concentration);
            if !kappa.is_finite() || kappa <= 0.0 {
                return Err(Error::invalid(format!(
                    "AoA concentration for locator {} must be positive, got {kappa}",
                    m.locator_id
                )));
            }
            Ok(AoaTerm {
                position: locator.position.vector(),
                world_dir: locator.orientation().rotate(m.direction.as_vector()),
                kappa,
                ln_norm: vmf_ln_norm_const(kappa),
            })
        })
        .collect()
}

pub(crate) fn aoa_ll_terms(terms: &[AoaTerm], x: &Vector3<f64>) -> f64 {
    let mut ll = 0.0;
    for term in terms {
        let offset = x - term.position;
        let dist = offset.norm();
        if dist < DEGENERACY_TOL_M {
            return f64::NEG_INFINITY;
        }
        ll += term.ln_norm + term.kappa * term.world_dir.dot(&offset) / dist;
    }
    ll
}

/// Gradient of [`aoa_ll_terms`] in `x`:
/// `Σ_b κ_b (I − u uᵀ) w_b / ‖x − l_b‖` with `u = (x − l_b)/‖x − l_b‖`.
pub(crate) fn aoa_grad_terms(terms: &[AoaTerm], x: &Vector3<f64>) -> Vector3<f64> {
    let mut g = Vector3::zeros();
    for term in terms {
        let offset = x - term.position;
        let dist = offset.norm();
        if dist < DEGENERACY_TOL_M {
            continue;
        }
        let u = offset / dist;
        let projector = Matrix3::identity() - u * u.transpose();
        g += term.kappa / dist * (projector * term.world_dir);
    }
    g
}

/// Log-likelihood of a set of direction measurements at position `x`.
pub fn aoa_log_likelihood(
    locators: &[AoaLocator],
    measurements: &[AoaMeasurement],
    position: &Point3,
) -> Result<f64> {
    if measurements.is_empty() {
        return Err(Error::EmptyMeasurements {
            estimator: "aoa_log_likelihood",
        });
    }
    check_degenerate(locators, measurements, position)?;
    let terms = aoa_terms(locators, measurements)?;
    Ok(aoa_ll_terms(&terms, &position.vector()))
}

pub(crate) fn check_degenerate(
    locators: &[AoaLocator],
    measurements: &[AoaMeasurement],
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

/// Maximum-likelihood position from direction measurements alone. Needs at
/// least two bearings for a well-posed fix; degenerate (near-parallel)
/// geometry shows up in the estimate's diagnostics rather than as an error.
pub fn aoa_estimate(
    locators: &[AoaLocator],
    measurements: &[AoaMeasurement],
    config: &SolverConfig,
) -> Result<Estimate> {
    if measurements.is_empty() {
        return Err(Error::EmptyMeasurements {
            estimator: "aoa_estimate",
        });
    }
    if measurements.len() < 2 {
        return Err(Error::InsufficientMeasurements {
            estimator: "aoa_estimate",
            needed: 2,
            got: measurements.len(),
        });
    }
    crate::joint::estimate_from_parts(
        &[],
        &crate::joint::no_toa_noise(),
        &[],
        locators,
        measurements,
        config,
    )
}
