use std::ops::Mul;

use nalgebra::{Rotation3, UnitQuaternion};
use serde::{Deserialize, Serialize};

use super::{rotation_about_axis, rotation_defect, Mat34, Mat4, Mat3, UnitAxis, Vec3};
use crate::{Error, Result};

/// Rotation followed by translation: `p ↦ R·p + t`.
///
/// Named by the frames it connects: a `front_to_world` transform takes
/// points expressed in the front-camera frame to the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoseSpec", into = "PoseSpec")]
pub struct RigidTransform {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    /// Validates that `rotation` is a proper rotation (within 1e-6).
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self> {
        let defect = rotation_defect(&rotation);
        if !(defect < 1e-6) || !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "not a rigid transform (rotation defect {defect:.3e})"
            )));
        }
        Ok(RigidTransform {
            rotation,
            translation,
        })
    }

    pub fn from_translation(translation: Vec3) -> Self {
        RigidTransform {
            rotation: Mat3::identity(),
            translation,
        }
    }

    pub fn from_rotation(rotation: Mat3) -> Self {
        RigidTransform {
            rotation,
            translation: Vec3::zeros(),
        }
    }

    pub fn from_axis_angle(axis: &UnitAxis, angle: f64, translation: Vec3) -> Self {
        RigidTransform {
            rotation: rotation_about_axis(axis, angle),
            translation,
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> Self {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn to_mat34(&self) -> Mat34 {
        let mut m = Mat34::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.set_column(3, &self.translation);
        m
    }

    pub fn to_mat4(&self) -> Mat4 {
        let mut m = Mat4::identity();
        m.fixed_view_mut::<3, 4>(0, 0).copy_from(&self.to_mat34());
        m
    }

    /// Origin of the source frame expressed in the target frame.
    pub fn origin(&self) -> Vec3 {
        self.translation
    }

    /// Rotation angle (radians) and translation distance separating two transforms.
    pub fn difference(&self, other: &RigidTransform) -> (f64, f64) {
        (
            super::rotation_angle_between(&self.rotation, &other.rotation),
            (self.translation - other.translation).norm(),
        )
    }
}

impl Mul for RigidTransform {
    type Output = RigidTransform;

    fn mul(self, rhs: RigidTransform) -> RigidTransform {
        self.compose(&rhs)
    }
}

impl Mul<Vec3> for RigidTransform {
    type Output = Vec3;

    fn mul(self, rhs: Vec3) -> Vec3 {
        self.apply(&rhs)
    }
}

/// File encoding of a pose: translation in meters and an axis-angle rotation
/// in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseSpec {
    pub translation: [f64; 3],
    #[serde(default = "default_axis")]
    pub rotation_axis: [f64; 3],
    #[serde(default)]
    pub rotation_deg: f64,
}

fn default_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

impl TryFrom<PoseSpec> for RigidTransform {
    type Error = Error;

    fn try_from(spec: PoseSpec) -> Result<Self> {
        let translation = Vec3::from(spec.translation);
        if !translation.iter().all(|v| v.is_finite()) || !spec.rotation_deg.is_finite() {
            return Err(Error::Schema("pose values must be finite".into()));
        }
        if spec.rotation_deg == 0.0 {
            return Ok(RigidTransform::from_translation(translation));
        }
        let axis = UnitAxis::normalize(Vec3::from(spec.rotation_axis))
            .map_err(|_| Error::Schema("pose rotation axis must be nonzero".into()))?;
        Ok(RigidTransform::from_axis_angle(
            &axis,
            spec.rotation_deg.to_radians(),
            translation,
        ))
    }
}

impl From<RigidTransform> for PoseSpec {
    fn from(t: RigidTransform) -> Self {
        let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(t.rotation));
        let (axis, angle) = match q.axis_angle() {
            Some((axis, angle)) => ([axis.x, axis.y, axis.z], angle.to_degrees()),
            None => (default_axis(), 0.0),
        };
        PoseSpec {
            translation: [t.translation.x, t.translation.y, t.translation.z],
            rotation_axis: axis,
            rotation_deg: angle,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sample() -> RigidTransform {
        let axis = UnitAxis::normalize(Vec3::new(0.2, -0.5, 0.8)).unwrap();
        RigidTransform::from_axis_angle(&axis, 1.1, Vec3::new(0.3, -1.0, 2.0))
    }

    #[test]
    fn inverse_composes_to_identity() {
        let t = sample();
        let id = t.compose(&t.inverse());
        assert!((id.rotation - Mat3::identity()).abs().max() < 1e-12);
        assert!(id.translation.norm() < 1e-12);
    }

    #[test]
    fn pose_spec_round_trip_near_half_turn() {
        let t = RigidTransform::from_axis_angle(&UnitAxis::y(), PI - 1e-9, Vec3::new(1.0, 2.0, 3.0));
        let back = RigidTransform::try_from(PoseSpec::from(t)).unwrap();
        assert!((back.rotation - t.rotation).abs().max() < 1e-12);
        let json = serde_json::to_string(&t).unwrap();
        let parsed: RigidTransform = serde_json::from_str(&json).unwrap();
        assert!((parsed.rotation - t.rotation).abs().max() < 1e-12);
    }

    #[test]
    fn rejects_non_rotation() {
        assert!(RigidTransform::new(Mat3::identity() * 2.0, Vec3::zeros()).is_err());
        assert!(RigidTransform::new(-Mat3::identity(), Vec3::zeros()).is_err());
    }
}
