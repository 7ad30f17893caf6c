//! Scalar Gaussian mixtures and the von Mises-Fisher direction model.
//!
//! Both densities are evaluated in log space throughout: mixture likelihoods
//! collapse many orders of magnitude apart, and vMF normalization constants
//! at large concentrations underflow long before the log-likelihood stops
//! being informative.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::UnitVec3;

/// `ln Σ exp(vᵢ)` without overflow; `-inf` for an empty slice.
pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        // All -inf (or empty): the sum is zero. NaN and +inf propagate.
        return max;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

const LN_2PI: f64 = 1.8378770664093456;

// ---------------------------------------------------------------------------
// Gaussian mixture
// ---------------------------------------------------------------------------

/// One weighted Gaussian component of a scalar mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: f64,
    pub std: f64,
}

/// A scalar Gaussian mixture `p(x) = Σᵢ wᵢ N(x | μᵢ, σᵢ²)`.
///
/// Weights are positive and sum to one (within 1e-9); standard deviations
/// are positive. Both are enforced at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    components: Vec<GaussianComponent>,
}

impl GaussianMixture {
    pub fn new(components: Vec<GaussianComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("mixture needs at least one component"));
        }
        let mut total = 0.0;
        for (i, c) in components.iter().enumerate() {
            if !c.weight.is_finite() || c.weight <= 0.0 {
                return Err(Error::invalid(format!(
                    "component {i}: weight must be positive, got {}",
                    c.weight
                )));
            }
            if !c.std.is_finite() || c.std <= 0.0 {
                return Err(Error::invalid(format!(
                    "component {i}: std must be positive, got {}",
                    c.std
                )));
            }
            if !c.mean.is_finite() {
                return Err(Error::invalid(format!("component {i}: mean must be finite")));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        Ok(GaussianMixture { components })
    }

    /// A single Gaussian as a one-component mixture.
    pub fn single(mean: f64, std: f64) -> Result<Self> {
        GaussianMixture::new(vec![GaussianComponent {
            weight: 1.0,
            mean,
            std,
        }])
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    /// `ln p(x)`, computed with log-sum-exp over the components.
    pub fn log_pdf(&self, x: f64) -> f64 {
        let terms: Vec<f64> = self
            .components
            .iter()
            .map(|c| {
                let z = (x - c.mean) / c.std;
                c.weight.ln() - 0.5 * LN_2PI - c.std.ln() - 0.5 * z * z
            })
            .collect();
        logsumexp(&terms)
    }

    /// Draws one value. Consumes exactly two RNG values (one uniform for the
    /// component, one standard normal) regardless of which component is hit,
    /// so paired experiments stay aligned on a shared RNG stream.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let z: f64 = rng.sample(StandardNormal);
        let mut cum = 0.0;
        let mut chosen = self.components[self.components.len() - 1];
        for c in &self.components {
            cum += c.weight;
            if u < cum {
                chosen = *c;
                break;
            }
        }
        chosen.mean + chosen.std * z
    }

    /// `Σ wᵢ μᵢ`.
    pub fn mean(&self) -> f64 {
        self.components.iter().map(|c| c.weight * c.mean).sum()
    }

    /// `Σ wᵢ (σᵢ² + μᵢ²) − mean²`.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        let second: f64 = self
            .components
            .iter()
            .map(|c| c.weight * (c.std * c.std + c.mean * c.mean))
            .sum();
        second - mean * mean
    }
}

// ---------------------------------------------------------------------------
// von Mises-Fisher
// ---------------------------------------------------------------------------

/// A von Mises-Fisher distribution on the unit sphere in R³:
/// `p(u) = c(κ) exp(κ μᵀu)` with `c(κ) = κ / (4π sinh κ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VonMisesFisher {
    mean_direction: UnitVec3,
    concentration: f64,
}

impl VonMisesFisher {
    pub fn new(mean_direction: UnitVec3, concentration: f64) -> Result<Self> {
        if !concentration.is_finite() || concentration <= 0.0 {
            return Err(Error::invalid(format!(
                "vMF concentration must be positive and finite, got {concentration}"
            )));
        }
        Ok(VonMisesFisher {
            mean_direction,
            concentration,
        })
    }

    pub fn mean_direction(&self) -> &UnitVec3 {
        &self.mean_direction
    }

    pub fn concentration(&self) -> f64 {
        self.concentration
    }

    /// `ln c(κ)`; see [`vmf_ln_norm_const`].
    pub fn log_norm_const(&self) -> f64 {
        vmf_ln_norm_const(self.concentration)
    }

    /// `ln p(u) = ln c(κ) + κ μᵀu`.
    pub fn log_pdf(&self, u: &UnitVec3) -> f64 {
        self.log_norm_const() + self.concentration * self.mean_direction.dot(u)
    }

    /// Log-density of the uniform sphere distribution, the κ → 0 limit.
    pub fn uniform_log_pdf() -> f64 {
        -(4.0 * PI).ln()
    }

    /// Expected value of `μᵀu`: `coth κ − 1/κ`.
    pub fn mean_resultant_length(&self) -> f64 {
        let k = self.concentration;
        1.0 / k.tanh() - 1.0 / k
    }

    /// Draws one direction by inverting the CDF of the cosine around the
    /// mean and picking the azimuth uniformly. Consumes exactly two RNG
    /// values per draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> UnitVec3 {
        let k = self.concentration;
        let xi: f64 = rng.random();
        let psi: f64 = rng.random::<f64>() * 2.0 * PI;
        // cos θ = 1 + ln(ξ + (1−ξ) e^{−2κ}) / κ, the inverse CDF of the
        // tilted-cosine marginal p(t) ∝ exp(κ t) on [−1, 1].
        let t = (1.0 + (xi + (1.0 - xi) * (-2.0 * k).exp()).ln() / k).clamp(-1.0, 1.0);
        let s = (1.0 - t * t).max(0.0).sqrt();
        let (t1, t2) = tangent_basis(&self.mean_direction);
        let v = t * self.mean_direction.as_vector()
            + s * (psi.cos() * t1 + psi.sin() * t2);
        // Unit up to rounding; the constructor renormalizes.
        UnitVec3::from_vector(v).expect("sampled direction has unit norm")
    }
}

/// `ln c(κ) = ln κ − ln 4π − ln sinh κ`, the log normalization constant of
/// the von Mises-Fisher density, with `ln sinh κ` expanded as
/// `κ − ln 2 + ln(−expm1(−2κ))` so that neither large nor small κ overflows
/// or cancels.
pub fn vmf_ln_norm_const(kappa: f64) -> f64 {
    let ln_sinh = kappa - std::f64::consts::LN_2 + (-(-2.0 * kappa).exp_m1()).ln();
    kappa.ln() - (4.0 * PI).ln() - ln_sinh
}

/// A deterministic right-handed orthonormal basis for the plane normal to
/// `u`, anchored on the axis least aligned with it.
fn tangent_basis(u: &UnitVec3) -> (nalgebra::Vector3<f64>, nalgebra::Vector3<f64>) {
    let v = u.as_vector();
    let ax = v.x.abs();
    let ay = v.y.abs();
    let az = v.z.abs();
    let axis = if ax <= ay && ax <= az {
        nalgebra::Vector3::x()
    } else if ay <= az {
        nalgebra::Vector3::y()
    } else {
        nalgebra::Vector3::z()
    };
    let t1 = v.cross(&axis).normalize();
    let t2 = v.cross(&t1);
    (t1, t2)
}
