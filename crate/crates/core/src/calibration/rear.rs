//! Rear-camera registration against the world frame.
//!
//! The front camera sees a board at one platform state; the rear camera may
//! see the same board at another state (a rear camera looking backward never
//! shares a view with the front one at a single pose). Front corners are
//! lifted into the world with the motor model, then the rear camera's world
//! pose is a rigid fit and its mount follows from the rear state.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::{rigid_align, RigidTransform, UnitAxis, Vec3};
use crate::rig::{front_to_world, PanTiltState};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RearRegistrationRecord {
    pub front_state: PanTiltState,
    /// Board corners in the front-camera frame at `front_state`.
    pub front_corners: Vec<(usize, Vec3)>,
    pub rear_state: PanTiltState,
    /// Board corners in the rear-camera frame at `rear_state`.
    pub rear_corners: Vec<(usize, Vec3)>,
}

#[derive(Debug, Clone, Copy)]
pub struct RearEstimate {
    pub rear_to_front: RigidTransform,
    /// RMS of the rigid fit, meters.
    pub rms: f64,
}

/// Mount estimate from corners already expressed in the world frame and the
/// same corners seen by the rear camera at `state`.
pub fn register_rear_camera(
    world_corners: &[Vec3],
    rear_corners: &[Vec3],
    state: PanTiltState,
    pan_axis: &UnitAxis,
    tilt_axis: &UnitAxis,
) -> Result<RearEstimate> {
    let fit = rigid_align(rear_corners, world_corners)?;
    let platform = front_to_world(pan_axis, tilt_axis, state);
    Ok(RearEstimate {
        rear_to_front: platform.inverse().compose(&fit.transform),
        rms: fit.rms,
    })
}

/// Pairs corners by index, lifts the front ones into the world and registers.
pub fn register_rear_record(
    record: &RearRegistrationRecord,
    pan_axis: &UnitAxis,
    tilt_axis: &UnitAxis,
) -> Result<RearEstimate> {
    let lift = front_to_world(pan_axis, tilt_axis, record.front_state);
    let front: BTreeMap<usize, Vec3> = record.front_corners.iter().copied().collect();
    let (world, rear): (Vec<Vec3>, Vec<Vec3>) = record
        .rear_corners
        .iter()
        .filter_map(|(k, p)| front.get(k).map(|f| (lift.apply(f), *p)))
        .unzip();
    if world.len() < 3 {
        return Err(Error::Degenerate(format!(
            "rear registration needs 3 corners seen by both cameras, got {}",
            world.len()
        )));
    }
    register_rear_camera(&world, &rear, record.rear_state, pan_axis, tilt_axis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rig::RigModel;
    use crate::scene::CheckerboardTarget;
    use crate::geometry::rotation_about_axis;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn board(center: Vec3, yaw_deg: f64) -> Vec<Vec3> {
        let rot = rotation_about_axis(&UnitAxis::y(), yaw_deg.to_radians());
        CheckerboardTarget::centered(center, rot, 6, 9, 0.04).unwrap().corners_world()
    }

    #[test]
    fn same_camera_at_home_is_identity() {
        let pts = board(Vec3::new(0.0, 0.0, 1.5), 10.0);
        let est = register_rear_camera(&pts, &pts, PanTiltState::home(), &UnitAxis::y(), &UnitAxis::x()).unwrap();
        let (rot, trans) = est.rear_to_front.difference(&RigidTransform::identity());
        assert!(rot < 1e-12 && trans < 1e-12);
    }

    fn synth(model: &RigModel, sigma: f64, seed: u64) -> RearRegistrationRecord {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sigma.max(1e-300)).unwrap();
        let yaw = 92f64.to_radians();
        let pts = board(Vec3::new(yaw.sin(), 0.0, yaw.cos()) * 1.2, 92.0 + 180.0);
        let front_state = PanTiltState::from_degrees(75.0, 0.0);
        let rear_state = PanTiltState::from_degrees(-75.0, 0.0);
        let mut see = |to_world: RigidTransform| -> Vec<(usize, Vec3)> {
            let inv = to_world.inverse();
            pts.iter()
                .enumerate()
                .map(|(k, p)| {
                    let n = if sigma > 0.0 {
                        Vec3::new(normal.sample(&mut rng), normal.sample(&mut rng), normal.sample(&mut rng))
                    } else {
                        Vec3::zeros()
                    };
                    (k, inv.apply(p) + n)
                })
                .collect()
        };
        let front_corners = see(model.rig_pose(front_state).unwrap().front_to_world);
        let rear_corners = see(model.rig_pose(rear_state).unwrap().rear_to_world);
        RearRegistrationRecord {
            front_state,
            front_corners,
            rear_state,
            rear_corners,
        }
    }

    #[test]
    fn recovers_mount_without_noise() {
        let model = RigModel::default_ground_truth();
        let est = register_rear_record(&synth(&model, 0.0, 0), &model.pan_axis, &model.tilt_axis).unwrap();
        let (rot, trans) = est.rear_to_front.difference(&model.rear_to_front);
        assert!(rot < 1e-9 && trans < 1e-9, "{rot} {trans}");
        assert!(est.rms < 1e-9);
    }

    #[test]
    fn noisy_mount_within_tolerance() {
        let model = RigModel::default_ground_truth();
        let mut rot_errs = Vec::new();
        let mut trans_errs = Vec::new();
        for seed in 0..20 {
            let est = register_rear_record(&synth(&model, 0.001, seed), &model.pan_axis, &model.tilt_axis).unwrap();
            let (rot, trans) = est.rear_to_front.difference(&model.rear_to_front);
            rot_errs.push(rot.to_degrees());
            trans_errs.push(trans);
        }
        rot_errs.sort_by(f64::total_cmp);
        trans_errs.sort_by(f64::total_cmp);
        assert!(rot_errs[10] < 0.2, "median rotation error {} deg", rot_errs[10]);
        assert!(trans_errs[10] < 0.003, "median translation error {} m", trans_errs[10]);
    }

    #[test]
    fn collinear_corners_propagate_degeneracy() {
        let pts: Vec<Vec3> = (0..5).map(|i| Vec3::new(i as f64, 0.0, 2.0)).collect();
        let err = register_rear_camera(&pts, &pts, PanTiltState::home(), &UnitAxis::y(), &UnitAxis::x());
        assert!(matches!(err, Err(Error::Degenerate(_))));
    }

    #[test]
    fn disjoint_corner_sets_rejected() {
        let record = RearRegistrationRecord {
            front_state: PanTiltState::home(),
            front_corners: vec![(0, Vec3::z()), (1, Vec3::x())],
            rear_state: PanTiltState::home(),
            rear_corners: vec![(5, Vec3::z()), (6, Vec3::x())],
        };
        let err = register_rear_record(&record, &UnitAxis::y(), &UnitAxis::x());
        assert!(matches!(err, Err(Error::Degenerate(_))));
    }
}
