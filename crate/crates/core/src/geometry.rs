//! Points, directions, rotations, and the locator types built from them.
//!
//! The world frame is right-handed with `z` up; positions are in metres.
//! Angle-of-arrival locators carry a rotation `Ω` mapping their local frame
//! into the world frame, so the unit direction from locator `b` at `l_b`
//! toward a position `x`, expressed in the locator's own frame, is
//! `Ωᵀ (x − l_b) / ‖x − l_b‖`.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Distances below this are treated as coincident with a locator, where
/// directions and distance derivatives stop being well defined.
pub const DEGENERACY_TOL_M: f64 = 1e-9;

/// Tolerance on `‖RᵀR − I‖` and `det R − 1` when accepting a raw matrix
/// as a rotation.
const ORTHONORMALITY_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Point3
// ---------------------------------------------------------------------------

/// A position in the world frame, in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn from_vector(v: Vector3<f64>) -> Self {
        Point3::new(v.x, v.y, v.z)
    }

    pub fn vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    /// Euclidean distance to `other`.
    pub fn distance(&self, other: &Point3) -> f64 {
        (self.vector() - other.vector()).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Distance between an estimate and the ground truth ignoring the vertical
/// axis: `√((x̂−x)² + (ŷ−y)²)`.
pub fn horizontal_error(estimate: &Point3, truth: &Point3) -> f64 {
    (estimate.x - truth.x).hypot(estimate.y - truth.y)
}

// ---------------------------------------------------------------------------
// UnitVec3
// ---------------------------------------------------------------------------

/// A direction: a 3-vector with unit Euclidean norm.
///
/// The constructor normalizes its input, so the invariant holds by
/// construction; a near-zero input has no direction and is rejected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVec3(Vector3<f64>);

impl UnitVec3 {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::from_vector(Vector3::new(x, y, z))
    }

    pub fn from_vector(v: Vector3<f64>) -> Result<Self> {
        let n = v.norm();
        if !n.is_finite() || n < 1e-12 {
            return Err(Error::invalid(format!(
                "cannot normalize vector with norm {n:e} into a direction"
            )));
        }
        Ok(UnitVec3(v / n))
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }

    pub fn y(&self) -> f64 {
        self.0.y
    }

    pub fn z(&self) -> f64 {
        self.0.z
    }

    pub fn as_vector(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn dot(&self, other: &UnitVec3) -> f64 {
        self.0.dot(&other.0)
    }
}

// ---------------------------------------------------------------------------
// Rotation3
// ---------------------------------------------------------------------------

/// A proper rotation matrix (orthonormal, determinant +1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3(Matrix3<f64>);

impl Rotation3 {
    pub fn identity() -> Self {
        Rotation3(Matrix3::identity())
    }

    /// Builds `R = Rz(yaw) · Ry(pitch) · Rx(roll)` (intrinsic z-y'-x''
    /// convention). Angles are in radians.
    pub fn from_euler(yaw: f64, pitch: f64, roll: f64) -> Self {
        let (sy, cy) = yaw.sin_cos();
        let (sp, cp) = pitch.sin_cos();
        let (sr, cr) = roll.sin_cos();
        let rz = Matrix3::new(cy, -sy, 0.0, sy, cy, 0.0, 0.0, 0.0, 1.0);
        let ry = Matrix3::new(cp, 0.0, sp, 0.0, 1.0, 0.0, -sp, 0.0, cp);
        let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, cr, -sr, 0.0, sr, cr);
        Rotation3(rz * ry * rx)
    }

    /// Accepts a raw matrix after checking orthonormality and orientation.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        let gram = m.transpose() * m;
        let defect = (gram - Matrix3::identity()).abs().max();
        if !defect.is_finite() || defect > ORTHONORMALITY_TOL {
            return Err(Error::invalid(format!(
                "matrix is not orthonormal (defect {defect:e})"
            )));
        }
        if (m.determinant() - 1.0).abs() > ORTHONORMALITY_TOL {
            return Err(Error::invalid("matrix is a reflection, not a rotation"));
        }
        Ok(Rotation3(m))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// Maps a vector from the local frame to the world frame (`R · v`).
    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    /// Maps a vector from the world frame to the local frame (`Rᵀ · v`).
    pub fn inverse_rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0.transpose() * v
    }

    /// `self · other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Rotation3) -> Rotation3 {
        Rotation3(self.0 * other.0)
    }
}

// ---------------------------------------------------------------------------
// Locators
// ---------------------------------------------------------------------------

/// A time-of-arrival locator: an anchor at a known position.
#[derive(Debug, Clone, PartialEq)]
pub struct ToaLocator {
    pub id: String,
    pub position: Point3,
}

impl ToaLocator {
    pub fn new(id: impl Into<String>, position: Point3) -> Self {
        ToaLocator {
            id: id.into(),
            position,
        }
    }
}

/// An angle-of-arrival locator: an anchor with a known orientation and a
/// von Mises-Fisher concentration describing its angular accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct AoaLocator {
    pub id: String,
    pub position: Point3,
    /// Concentration `κ` of the angular error model; must be positive.
    pub concentration: f64,
    yaw_pitch_roll_rad: [f64; 3],
    orientation: Rotation3,
}

impl AoaLocator {
    pub fn new(
        id: impl Into<String>,
        position: Point3,
        yaw_pitch_roll_rad: [f64; 3],
        concentration: f64,
    ) -> Result<Self> {
        if !concentration.is_finite() || concentration <= 0.0 {
            return Err(Error::invalid(format!(
                "AoA concentration must be positive and finite, got {concentration}"
            )));
        }
        let [yaw, pitch, roll] = yaw_pitch_roll_rad;
        Ok(AoaLocator {
            id: id.into(),
            position,
            concentration,
            yaw_pitch_roll_rad,
            orientation: Rotation3::from_euler(yaw, pitch, roll),
        })
    }

    /// The yaw, pitch, roll angles this locator was built from, in radians.
    pub fn yaw_pitch_roll_rad(&self) -> [f64; 3] {
        self.yaw_pitch_roll_rad
    }

    /// Rotation `Ω` from the locator's local frame into the world frame.
    pub fn orientation(&self) -> &Rotation3 {
        &self.orientation
    }
}

/// The noise-free direction from locator `b` to position `x`, expressed in
/// the locator's local frame: `Ωᵀ (x − l_b) / ‖x − l_b‖`.
///
/// Fails when `x` is within [`DEGENERACY_TOL_M`] of the locator.
pub fn true_direction(locator: &AoaLocator, x: &Point3) -> Result<UnitVec3> {
    let diff = x.vector() - locator.position.vector();
    let dist = diff.norm();
    if dist < DEGENERACY_TOL_M {
        return Err(Error::DegeneratePosition {
            id: locator.id.clone(),
            tolerance_m: DEGENERACY_TOL_M,
        });
    }
    let local = locator.orientation.inverse_rotate(&(diff / dist));
    // Already unit length up to rounding; renormalize to keep the invariant.
    UnitVec3::from_vector(local)
}

// ---------------------------------------------------------------------------
// Aabb
// ---------------------------------------------------------------------------

/// An axis-aligned box, used for world bounds and solver constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn new(min: Point3, max: Point3) -> Result<Self> {
        if !min.is_finite() || !max.is_finite() {
            return Err(Error::invalid("box corners must be finite"));
        }
        if min.x > max.x || min.y > max.y || min.z > max.z {
            return Err(Error::invalid(format!(
                "box min ({}, {}, {}) exceeds max ({}, {}, {})",
                min.x, min.y, min.z, max.x, max.y, max.z
            )));
        }
        Ok(Aabb { min, max })
    }

    pub fn contains(&self, p: &Point3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    pub fn center(&self) -> Point3 {
        Point3::new(
            0.5 * (self.min.x + self.max.x),
            0.5 * (self.min.y + self.max.y),
            0.5 * (self.min.z + self.max.z),
        )
    }

    /// The eight corner points, in binary counting order over (x, y, z).
    pub fn corners(&self) -> [Point3; 8] {
        let mut out = [self.min; 8];
        for (i, corner) in out.iter_mut().enumerate() {
            corner.x = if i & 1 == 0 { self.min.x } else { self.max.x };
            corner.y = if i & 2 == 0 { self.min.y } else { self.max.y };
            corner.z = if i & 4 == 0 { self.min.z } else { self.max.z };
        }
        out
    }

    /// Grows the box by `margin` on every face.
    pub fn inflate(&self, margin: f64) -> Aabb {
        Aabb {
            min: Point3::new(self.min.x - margin, self.min.y - margin, self.min.z - margin),
            max: Point3::new(self.max.x + margin, self.max.y + margin, self.max.z + margin),
        }
    }

    /// Clamps each coordinate into the box.
    pub fn clamp(&self, p: &Point3) -> Point3 {
        Point3::new(
            p.x.clamp(self.min.x, self.max.x),
            p.y.clamp(self.min.y, self.max.y),
            p.z.clamp(self.min.z, self.max.z),
        )
    }
}
