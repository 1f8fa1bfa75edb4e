use serde::{Deserialize, Serialize};

use super::{skew, Mat3, Vec3};
use crate::{Error, Result};

const UNIT_TOLERANCE: f64 = 1e-6;

/// A rotation axis of unit length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct UnitAxis(Vec3);

impl UnitAxis {
    /// Accepts a vector whose norm is within 1e-6 of one and renormalizes it.
    pub fn new(direction: Vec3) -> Result<Self> {
        let norm = direction.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "rotation axis must be unit length, got norm {norm}"
            )));
        }
        Ok(UnitAxis(direction / norm))
    }

    /// Normalizes any nonzero finite vector.
    pub fn normalize(direction: Vec3) -> Result<Self> {
        let norm = direction.norm();
        if !norm.is_finite() || norm < 1e-300 {
            return Err(Error::InvalidArgument(
                "rotation axis must be a nonzero finite vector".into(),
            ));
        }
        Ok(UnitAxis(direction / norm))
    }

    pub fn x() -> Self {
        UnitAxis(Vec3::x())
    }

    pub fn y() -> Self {
        UnitAxis(Vec3::y())
    }

    pub fn z() -> Self {
        UnitAxis(Vec3::z())
    }

    pub fn direction(&self) -> Vec3 {
        self.0
    }

    pub fn flipped(&self) -> Self {
        UnitAxis(-self.0)
    }

    /// Angle between the two axis directions, in radians.
    pub fn angle_to(&self, other: &UnitAxis) -> f64 {
        // atan2 keeps precision for tiny angles where acos would not.
        self.0.cross(&other.0).norm().atan2(self.0.dot(&other.0))
    }
}

impl TryFrom<[f64; 3]> for UnitAxis {
    type Error = Error;

    fn try_from(v: [f64; 3]) -> Result<Self> {
        UnitAxis::normalize(Vec3::from(v))
    }
}

impl From<UnitAxis> for [f64; 3] {
    fn from(a: UnitAxis) -> Self {
        [a.0.x, a.0.y, a.0.z]
    }
}

/// Rotation by `theta` radians about `axis`, written out entry by entry.
pub fn rotation_about_axis(axis: &UnitAxis, theta: f64) -> Mat3 {
    let (x, y, z) = (axis.0.x, axis.0.y, axis.0.z);
    let c = theta.cos();
    let s = theta.sin();
    let v = 1.0 - c;
    Mat3::new(
        c + x * x * v,
        x * y * v - z * s,
        x * z * v + y * s,
        y * x * v + z * s,
        c + y * y * v,
        y * z * v - x * s,
        z * x * v - y * s,
        z * y * v + x * s,
        c + z * z * v,
    )
}

/// Derivative of `rotation_about_axis(a, theta)` when the axis moves along
/// `da` (a tangent direction of the unit sphere at `a`).
pub(crate) fn rotation_axis_derivative(axis: &Vec3, da: &Vec3, theta: f64) -> Mat3 {
    let v = 1.0 - theta.cos();
    (da * axis.transpose() + axis * da.transpose()) * v + skew(da) * theta.sin()
}
