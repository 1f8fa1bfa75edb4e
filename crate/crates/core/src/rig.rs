//! Kinematic model of the pan/tilt platform carrying the front RGB-D camera,
//! the rear user-tracking camera and the projector.
//!
//! The world frame is the front camera's frame at the home pose. Both motor
//! axes are fixed in the world and pass through its origin; a platform
//! state `(α, β)` maps front-camera points to the world as
//! `P_world = R_tilt(β) · R_pan(α) · P_front`. The rear camera and the
//! projector are rigidly mounted to the platform, so their world poses
//! follow the same rotation.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::geometry::{rotation_about_axis, Mat3, PinholeDevice, RigidTransform, UnitAxis, Vec3};
use crate::scene::CheckerboardTarget;
use crate::{Error, Result};

/// Pan (`alpha`) and tilt (`beta`) angles in radians. Files store degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "StateDegrees", into = "StateDegrees")]
pub struct PanTiltState {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateDegrees {
    pan_deg: f64,
    tilt_deg: f64,
}

impl From<StateDegrees> for PanTiltState {
    fn from(s: StateDegrees) -> Self {
        PanTiltState::from_degrees(s.pan_deg, s.tilt_deg)
    }
}

impl From<PanTiltState> for StateDegrees {
    fn from(s: PanTiltState) -> Self {
        StateDegrees {
            pan_deg: s.alpha.to_degrees(),
            tilt_deg: s.beta.to_degrees(),
        }
    }
}

impl PanTiltState {
    pub fn new(alpha: f64, beta: f64) -> Self {
        PanTiltState { alpha, beta }
    }

    pub fn from_degrees(pan_deg: f64, tilt_deg: f64) -> Self {
        PanTiltState::new(pan_deg.to_radians(), tilt_deg.to_radians())
    }

    pub fn home() -> Self {
        PanTiltState::default()
    }
}

/// `R(β about tilt) · R(α about pan)`, without limit checks.
pub fn pan_tilt_rotation_unchecked(pan_axis: &UnitAxis, tilt_axis: &UnitAxis, state: PanTiltState) -> Mat3 {
    rotation_about_axis(tilt_axis, state.beta) * rotation_about_axis(pan_axis, state.alpha)
}

/// Front-camera-to-world transform for a platform state.
pub fn front_to_world(pan_axis: &UnitAxis, tilt_axis: &UnitAxis, state: PanTiltState) -> RigidTransform {
    RigidTransform::from_rotation(pan_tilt_rotation_unchecked(pan_axis, tilt_axis, state))
}

/// Rig geometry: motor axes, device intrinsics and mounting transforms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RigFile", into = "RigFile")]
pub struct RigModel {
    pub pan_axis: UnitAxis,
    pub tilt_axis: UnitAxis,
    /// Maps rear-camera points into the front-camera frame.
    pub rear_to_front: RigidTransform,
    /// Maps front-camera points into the projector frame.
    pub front_to_proj: RigidTransform,
    pub front_device: PinholeDevice,
    pub rear_device: PinholeDevice,
    pub proj_device: PinholeDevice,
    /// Symmetric mechanical limit for both angles, radians.
    pub limit: f64,
}

/// World poses of the three devices for one platform state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigPose {
    pub front_to_world: RigidTransform,
    pub rear_to_world: RigidTransform,
    pub proj_to_world: RigidTransform,
}

impl RigModel {
    /// The simulated rig used by the default configuration: slightly
    /// skewed motor axes, a rear camera looking backward from just above
    /// and behind the front camera, and a 1920×1080 projector beside it.
    pub fn default_ground_truth() -> Self {
        let pan_axis = UnitAxis::normalize(Vec3::new(
            0.8f64.to_radians().tan(),
            1.0,
            1.5f64.to_radians().tan(),
        ))
        .expect("nonzero");
        let tilt_axis = UnitAxis::normalize(Vec3::new(
            1.0,
            1.0f64.to_radians().tan(),
            -0.5f64.to_radians().tan(),
        ))
        .expect("nonzero");
        let rear_rotation = rotation_about_axis(&UnitAxis::x(), 2.0f64.to_radians())
            * rotation_about_axis(&UnitAxis::y(), std::f64::consts::PI);
        let rear_to_front = RigidTransform {
            rotation: rear_rotation,
            translation: Vec3::new(0.01, -0.12, -0.08),
        };
        let proj_rotation = rotation_about_axis(&UnitAxis::y(), -1.0f64.to_radians())
            * rotation_about_axis(&UnitAxis::x(), 2.0f64.to_radians());
        let proj_to_front = RigidTransform {
            rotation: proj_rotation,
            translation: Vec3::new(0.12, 0.05, 0.02),
        };
        RigModel {
            pan_axis,
            tilt_axis,
            rear_to_front,
            front_to_proj: proj_to_front.inverse(),
            front_device: PinholeDevice::new(365.0, 365.0, 255.5, 211.5, 512, 424).expect("valid"),
            rear_device: PinholeDevice::new(525.0, 525.0, 319.5, 239.5, 640, 480).expect("valid"),
            proj_device: PinholeDevice::new(1500.0, 1500.0, 960.0, 540.0, 1920, 1080).expect("valid"),
            limit: std::f64::consts::FRAC_PI_2,
        }
    }

    pub fn check_limits(&self, state: PanTiltState) -> Result<()> {
        let ok = |a: f64| a.is_finite() && a.abs() <= self.limit + 1e-12;
        if ok(state.alpha) && ok(state.beta) {
            Ok(())
        } else {
            Err(Error::Limit {
                alpha: state.alpha,
                beta: state.beta,
                limit: self.limit,
            })
        }
    }

    /// `R(β)·R(α)` with each factor about this rig's own axis.
    pub fn pan_tilt_rotation(&self, state: PanTiltState) -> Result<Mat3> {
        self.check_limits(state)?;
        Ok(pan_tilt_rotation_unchecked(&self.pan_axis, &self.tilt_axis, state))
    }

    pub fn rig_pose(&self, state: PanTiltState) -> Result<RigPose> {
        let front_to_world = RigidTransform::from_rotation(self.pan_tilt_rotation(state)?);
        Ok(RigPose {
            front_to_world,
            rear_to_world: front_to_world.compose(&self.rear_to_front),
            proj_to_world: front_to_world.compose(&self.front_to_proj.inverse()),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("rig serializes")
    }
}

pub const RIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RigFile {
    version: u32,
    pan_axis: UnitAxis,
    tilt_axis: UnitAxis,
    rear_to_front: RigidTransform,
    front_to_proj: RigidTransform,
    front_device: PinholeDevice,
    rear_device: PinholeDevice,
    proj_device: PinholeDevice,
    #[serde(default = "default_limit_deg")]
    limit_deg: f64,
}

fn default_limit_deg() -> f64 {
    90.0
}

impl TryFrom<RigFile> for RigModel {
    type Error = Error;

    fn try_from(f: RigFile) -> Result<Self> {
        if f.version != RIG_SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "unsupported rig version {} (expected {RIG_SCHEMA_VERSION})",
                f.version
            )));
        }
        if !(f.limit_deg > 0.0 && f.limit_deg <= 180.0) {
            return Err(Error::Schema(format!("limit_deg {} out of range", f.limit_deg)));
        }
        Ok(RigModel {
            pan_axis: f.pan_axis,
            tilt_axis: f.tilt_axis,
            rear_to_front: f.rear_to_front,
            front_to_proj: f.front_to_proj,
            front_device: f.front_device,
            rear_device: f.rear_device,
            proj_device: f.proj_device,
            limit: f.limit_deg.to_radians(),
        })
    }
}

impl From<RigModel> for RigFile {
    fn from(m: RigModel) -> Self {
        RigFile {
            version: RIG_SCHEMA_VERSION,
            pan_axis: m.pan_axis,
            tilt_axis: m.tilt_axis,
            rear_to_front: m.rear_to_front,
            front_to_proj: m.front_to_proj,
            front_device: m.front_device,
            rear_device: m.rear_device,
            proj_device: m.proj_device,
            limit_deg: m.limit.to_degrees(),
        }
    }
}

/// World points as seen by a device: transformed into its frame, clipped to
/// its frustum, perturbed by isotropic Gaussian noise of `sigma` meters.
pub fn observe_points(
    points_world: &[Vec3],
    device: &PinholeDevice,
    device_to_world: &RigidTransform,
    sigma: f64,
    rng: &mut impl Rng,
) -> Vec<(usize, Vec3)> {
    let world_to_device = device_to_world.inverse();
    let mut out = Vec::new();
    for (k, p) in points_world.iter().enumerate() {
        let local = world_to_device.apply(p);
        let noise = Vec3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        ) * sigma;
        let visible = device
            .project_local(&local)
            .map(|px| device.contains(px.u, px.v))
            .unwrap_or(false);
        if visible {
            out.push((k, local + noise));
        }
    }
    out
}

/// Checkerboard corners in the front-camera frame at platform `state`.
pub fn observe_checkerboard(
    target: &CheckerboardTarget,
    model: &RigModel,
    state: PanTiltState,
    noise_sigma: f64,
    rng: &mut impl Rng,
) -> Result<Vec<(usize, Vec3)>> {
    let pose = model.rig_pose(state)?;
    let seen = observe_points(
        &target.corners_world(),
        &model.front_device,
        &pose.front_to_world,
        noise_sigma,
        rng,
    );
    if seen.is_empty() {
        return Err(Error::EmptyObservation);
    }
    Ok(seen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{rotation_defect, Vec3};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6};

    fn ideal() -> RigModel {
        RigModel {
            pan_axis: UnitAxis::y(),
            tilt_axis: UnitAxis::x(),
            ..RigModel::default_ground_truth()
        }
    }

    #[test]
    fn home_is_identity() {
        let m = RigModel::default_ground_truth();
        assert_eq!(m.pan_tilt_rotation(PanTiltState::home()).unwrap(), Mat3::identity());
        let pose = m.rig_pose(PanTiltState::home()).unwrap();
        assert_eq!(pose.front_to_world, RigidTransform::identity());
    }

    #[test]
    fn quarter_pan_turns_forward_to_right() {
        let r = ideal().pan_tilt_rotation(PanTiltState::new(FRAC_PI_2, 0.0)).unwrap();
        assert!((r * Vec3::z() - Vec3::x()).norm() < 1e-15);
    }

    #[test]
    fn tilt_then_pan_order() {
        let m = RigModel::default_ground_truth();
        let s = PanTiltState::new(FRAC_PI_6, FRAC_PI_6);
        let r = m.pan_tilt_rotation(s).unwrap();
        // Independent product, multiplied out entry by entry.
        let a = rotation_about_axis(&m.tilt_axis, s.beta);
        let b = rotation_about_axis(&m.pan_axis, s.alpha);
        let mut manual = Mat3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                manual[(i, j)] = (0..3).map(|k| a[(i, k)] * b[(k, j)]).sum();
            }
        }
        assert!((r - manual).abs().max() < 1e-15);
        assert!((r - b * a).abs().max() > 1e-3);
    }

    #[test]
    fn limits_enforced() {
        let m = RigModel::default_ground_truth();
        assert!(matches!(m.rig_pose(PanTiltState::new(2.0, 0.0)), Err(Error::Limit { .. })));
        assert!(m.rig_pose(PanTiltState::new(FRAC_PI_2, -FRAC_PI_2)).is_ok());
    }

    #[test]
    fn rear_view_rotates_with_platform() {
        let m = ideal();
        let home = m.rig_pose(PanTiltState::home()).unwrap();
        let p = home.rear_to_world.apply(&Vec3::new(0.0, 0.0, 1.5));
        let in_view = |pose: &RigPose| {
            m.rear_device
                .project(&pose.rear_to_world.inverse(), &p)
                .map(|px| m.rear_device.contains(px.u, px.v))
                .unwrap_or(false)
        };
        assert!(in_view(&home));
        let panned = m.rig_pose(PanTiltState::new(FRAC_PI_2, 0.0)).unwrap();
        assert!(!in_view(&panned));
    }

    #[test]
    fn projector_composition_consistent() {
        let m = RigModel::default_ground_truth();
        let s = PanTiltState::new(0.3, -0.2);
        let pose = m.rig_pose(s).unwrap();
        let id = pose.proj_to_world.compose(&m.front_to_proj).compose(&pose.front_to_world.inverse());
        assert!((id.rotation - Mat3::identity()).abs().max() < 1e-12);
        assert!(id.translation.norm() < 1e-12);
    }

    #[test]
    fn poses_are_rigid_and_round_trip() {
        let m = RigModel::default_ground_truth();
        for k in 0..50 {
            let s = PanTiltState::new(-1.5 + 0.06 * k as f64, 1.4 - 0.05 * k as f64);
            let pose = m.rig_pose(s).unwrap();
            for t in [pose.front_to_world, pose.rear_to_world, pose.proj_to_world] {
                assert!(rotation_defect(&t.rotation) < 1e-9);
            }
            let p = Vec3::new(0.3, -1.0, 2.5);
            let back = pose.front_to_world.apply(&pose.front_to_world.inverse().apply(&p));
            assert!((back - p).norm() < 1e-12);
        }
        let pan_only = m.rig_pose(PanTiltState::new(0.4, 0.0)).unwrap();
        assert!((pan_only.front_to_world.rotation - rotation_about_axis(&m.pan_axis, 0.4)).abs().max() < 1e-15);
    }

    #[test]
    fn checkerboard_observation() {
        let m = ideal();
        let board = CheckerboardTarget::centered(Vec3::new(0.0, 0.0, 1.5), Mat3::identity(), 6, 9, 0.04).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let obs = observe_checkerboard(&board, &m, PanTiltState::home(), 0.0, &mut rng).unwrap();
        assert_eq!(obs.len(), 54);
        assert_eq!(obs[0], (0, board.corners_world()[0]));

        let alpha = 0.2;
        let obs = observe_checkerboard(&board, &m, PanTiltState::new(alpha, 0.0), 0.0, &mut rng).unwrap();
        let r = rotation_about_axis(&UnitAxis::y(), alpha);
        for (k, p) in obs {
            assert!((p - r.transpose() * board.corners_world()[k]).norm() < 1e-12);
        }

        let behind = CheckerboardTarget::centered(Vec3::new(0.0, 0.0, -1.5), Mat3::identity(), 6, 9, 0.04).unwrap();
        assert!(matches!(
            observe_checkerboard(&behind, &m, PanTiltState::home(), 0.0, &mut rng),
            Err(Error::EmptyObservation)
        ));
    }

    #[test]
    fn rig_file_round_trip() {
        let m = RigModel::default_ground_truth();
        let back: RigModel = serde_json::from_str(&m.to_json()).unwrap();
        assert!(back.pan_axis.angle_to(&m.pan_axis) < 1e-15);
        assert!((back.rear_to_front.rotation - m.rear_to_front.rotation).abs().max() < 1e-12);
        assert_eq!(back.proj_device, m.proj_device);
    }
}
