//! Synthetic calibration sessions generated from a ground-truth rig.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::axis::{AxisKind, AxisObservationSet, AxisRecord};
use super::projector::{ProjectorCorrespondence, ProjectorCorrespondenceSet};
use super::rear::RearRegistrationRecord;
use super::session::CalibrationSession;
use crate::geometry::{rotation_about_axis, Mat3, UnitAxis, Vec3};
use crate::rig::{observe_checkerboard, observe_points, PanTiltState, RigModel};
use crate::scene::CheckerboardTarget;
use crate::{Error, Result};

/// A plane the projector throws its pattern onto, placed on the front
/// camera's optical axis at home pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionPlane {
    pub distance_m: f64,
    pub yaw_deg: f64,
    pub pitch_deg: f64,
    /// Share of the projector image spanned by the pattern's corner grid.
    pub pattern_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub seed: u64,
    pub angles_deg: Vec<f64>,
    pub board_rows: usize,
    pub board_cols: usize,
    pub square_size_m: f64,
    pub board_distance_m: f64,
    pub corner_noise_m: f64,
    pub depth_noise_m: f64,
    pub rear_front_state: PanTiltState,
    pub rear_rear_state: PanTiltState,
    /// Direction (yaw about world y) and range of the rear registration board.
    pub rear_board_yaw_deg: f64,
    pub rear_board_distance_m: f64,
    pub pattern_rows: usize,
    pub pattern_cols: usize,
    pub projection_planes: Vec<ProjectionPlane>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            seed: 0,
            angles_deg: vec![-24.0, -16.0, -8.0, 0.0, 8.0, 16.0, 24.0],
            board_rows: 6,
            board_cols: 9,
            square_size_m: 0.04,
            board_distance_m: 1.5,
            corner_noise_m: 0.001,
            depth_noise_m: 0.002,
            rear_front_state: PanTiltState::from_degrees(75.0, 0.0),
            rear_rear_state: PanTiltState::from_degrees(-75.0, 0.0),
            rear_board_yaw_deg: 92.0,
            rear_board_distance_m: 1.2,
            pattern_rows: 6,
            pattern_cols: 9,
            projection_planes: vec![
                ProjectionPlane { distance_m: 1.6, yaw_deg: 20.0, pitch_deg: 0.0, pattern_fraction: 0.5 },
                ProjectionPlane { distance_m: 2.2, yaw_deg: -25.0, pitch_deg: 10.0, pattern_fraction: 0.65 },
                ProjectionPlane { distance_m: 2.8, yaw_deg: 0.0, pitch_deg: -20.0, pattern_fraction: 0.8 },
            ],
        }
    }
}

impl SessionConfig {
    pub fn noiseless() -> Self {
        SessionConfig {
            corner_noise_m: 0.0,
            depth_noise_m: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.corner_noise_m < 0.0 || self.depth_noise_m < 0.0 {
            return Err(Error::InvalidArgument("noise levels must be non-negative".into()));
        }
        if self.pattern_rows < 2 || self.pattern_cols < 2 {
            return Err(Error::InvalidArgument("projected pattern needs at least 2×2 corners".into()));
        }
        if let Some(p) = self
            .projection_planes
            .iter()
            .find(|p| !(p.distance_m > 0.0) || !(p.pattern_fraction > 0.0 && p.pattern_fraction <= 1.0))
        {
            return Err(Error::InvalidArgument(format!("invalid projection plane {p:?}")));
        }
        Ok(())
    }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn yaw_pitch(yaw_deg: f64, pitch_deg: f64) -> Mat3 {
    rotation_about_axis(&UnitAxis::y(), yaw_deg.to_radians())
        * rotation_about_axis(&UnitAxis::x(), pitch_deg.to_radians())
}

fn axis_set(
    kind: AxisKind,
    board: &CheckerboardTarget,
    truth: &RigModel,
    cfg: &SessionConfig,
    rng: &mut ChaCha8Rng,
) -> Result<AxisObservationSet> {
    let records = cfg
        .angles_deg
        .iter()
        .map(|&deg| {
            let state = match kind {
                AxisKind::Pan => PanTiltState::from_degrees(deg, 0.0),
                AxisKind::Tilt => PanTiltState::from_degrees(0.0, deg),
            };
            Ok(AxisRecord {
                theta: deg.to_radians(),
                corners: observe_checkerboard(board, truth, state, cfg.corner_noise_m, rng)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(AxisObservationSet { which_axis: kind, records })
}

/// Projected pattern corners landing on each plane, measured by the front
/// camera with noise along its viewing ray.
fn projector_set(truth: &RigModel, cfg: &SessionConfig, rng: &mut ChaCha8Rng) -> ProjectorCorrespondenceSet {
    let dev = &truth.proj_device;
    let proj_to_front = truth.front_to_proj.inverse();
    let origin = proj_to_front.origin();
    let (w, h) = (dev.width as f64, dev.height as f64);
    let mut records = Vec::new();
    for (id, plane) in cfg.projection_planes.iter().enumerate() {
        let normal = yaw_pitch(plane.yaw_deg, plane.pitch_deg) * Vec3::z();
        let anchor = Vec3::new(0.0, 0.0, plane.distance_m);
        let f = plane.pattern_fraction;
        for i in 0..cfg.pattern_rows {
            for j in 0..cfg.pattern_cols {
                let u = (w - 1.0) * (0.5 - f / 2.0 + f * j as f64 / (cfg.pattern_cols - 1) as f64);
                let v = (h - 1.0) * (0.5 - f / 2.0 + f * i as f64 / (cfg.pattern_rows - 1) as f64);
                let dir = proj_to_front.apply_vector(&dev.ray(u, v));
                let noise: f64 = StandardNormal.sample(rng);
                let denom = dir.dot(&normal);
                if denom.abs() < 1e-12 {
                    continue;
                }
                let t = (anchor - origin).dot(&normal) / denom;
                if t <= 0.0 {
                    continue;
                }
                let p = origin + dir * t;
                let seen = truth
                    .front_device
                    .project_local(&p)
                    .map(|px| truth.front_device.contains(px.u, px.v))
                    .unwrap_or(false);
                if !seen {
                    continue;
                }
                records.push(ProjectorCorrespondence {
                    x_proj: [u, v],
                    p_front: p + p.normalize() * (cfg.depth_noise_m * noise),
                    plane_id: id as u32,
                });
            }
        }
    }
    ProjectorCorrespondenceSet {
        width: dev.width,
        height: dev.height,
        records,
    }
}

/// Simulates a complete calibration session against `truth`. Each part uses
/// its own random stream, so changing one part's size leaves the others'
/// noise unchanged.
pub fn simulate_session(truth: &RigModel, cfg: &SessionConfig) -> Result<CalibrationSession> {
    cfg.validate()?;
    let board = CheckerboardTarget::centered(
        Vec3::new(0.0, 0.0, cfg.board_distance_m),
        Mat3::identity(),
        cfg.board_rows,
        cfg.board_cols,
        cfg.square_size_m,
    )?;
    let pan = axis_set(AxisKind::Pan, &board, truth, cfg, &mut rng(cfg.seed, 0))?;
    let tilt = axis_set(AxisKind::Tilt, &board, truth, cfg, &mut rng(cfg.seed, 1))?;

    let yaw = cfg.rear_board_yaw_deg.to_radians();
    let rear_board = CheckerboardTarget::centered(
        Vec3::new(yaw.sin(), 0.0, yaw.cos()) * cfg.rear_board_distance_m,
        yaw_pitch(cfg.rear_board_yaw_deg + 180.0, 0.0),
        cfg.board_rows,
        cfg.board_cols,
        cfg.square_size_m,
    )?;
    let mut rear_rng = rng(cfg.seed, 2);
    let front_corners = observe_checkerboard(&rear_board, truth, cfg.rear_front_state, cfg.corner_noise_m, &mut rear_rng)?;
    let rear_pose = truth.rig_pose(cfg.rear_rear_state)?;
    let rear_corners = observe_points(
        &rear_board.corners_world(),
        &truth.rear_device,
        &rear_pose.rear_to_world,
        cfg.corner_noise_m,
        &mut rear_rng,
    );
    if rear_corners.is_empty() {
        return Err(Error::EmptyObservation);
    }

    let projector = projector_set(truth, cfg, &mut rng(cfg.seed, 3));

    Ok(CalibrationSession {
        version: 1,
        front_device: truth.front_device,
        rear_device: truth.rear_device,
        pan: Some(pan),
        tilt: Some(tilt),
        rear: Some(RearRegistrationRecord {
            front_state: cfg.rear_front_state,
            front_corners,
            rear_state: cfg.rear_rear_state,
            rear_corners,
        }),
        projector: Some(projector),
        ground_truth: Some(truth.clone()),
    })
}
