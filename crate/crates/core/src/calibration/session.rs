use std::path::Path;

use serde::{Deserialize, Serialize};

use super::axis::{estimate_axis, AxisKind, AxisObservationSet};
use super::projector::{calibrate_projector, ProjectorCorrespondenceSet};
use super::rear::{register_rear_record, RearRegistrationRecord};
use crate::geometry::{PinholeDevice, RigidTransform, UnitAxis};
use crate::rig::RigModel;
use crate::{Error, Result};

const SESSION_VERSION: u32 = 1;
const RESULT_VERSION: u32 = 1;

/// Everything the pipeline consumes. Each stage's data is optional so that a
/// partial session fails with the name of the missing stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSession {
    pub version: u32,
    pub front_device: PinholeDevice,
    pub rear_device: PinholeDevice,
    #[serde(default)]
    pub pan: Option<AxisObservationSet>,
    #[serde(default)]
    pub tilt: Option<AxisObservationSet>,
    #[serde(default)]
    pub rear: Option<RearRegistrationRecord>,
    #[serde(default)]
    pub projector: Option<ProjectorCorrespondenceSet>,
    /// Attached by the simulator; enables parameter-error reporting.
    #[serde(default)]
    pub ground_truth: Option<RigModel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// Combined RMS of both axis fits, meters.
    pub axis_rms_m: f64,
    pub pan_rms_m: f64,
    pub tilt_rms_m: f64,
    pub rear_rms_m: f64,
    pub proj_reproj_rms_px: f64,
    pub proj_dlt_rms_px: f64,
}

/// Differences between estimated and true parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterErrors {
    #[serde(rename = "pan_axis_deg", with = "super::degrees")]
    pub pan_axis: f64,
    #[serde(rename = "tilt_axis_deg", with = "super::degrees")]
    pub tilt_axis: f64,
    #[serde(rename = "rear_rotation_deg", with = "super::degrees")]
    pub rear_rotation: f64,
    pub rear_translation_m: f64,
    /// Relative error of the worse of the two focal lengths.
    pub proj_focal_rel: f64,
    /// Worst relative error over fx, fy, cx, cy.
    pub proj_intrinsics_rel: f64,
    #[serde(rename = "proj_rotation_deg", with = "super::degrees")]
    pub proj_rotation: f64,
    pub proj_translation_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub version: u32,
    pub pan_axis: UnitAxis,
    pub tilt_axis: UnitAxis,
    pub rear_to_front: RigidTransform,
    pub proj_device: PinholeDevice,
    pub front_to_proj: RigidTransform,
    pub front_device: PinholeDevice,
    pub rear_device: PinholeDevice,
    pub residuals: Residuals,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub errors: Option<ParameterErrors>,
}

impl CalibrationSession {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json { source, .. } => Error::json(path.display().to_string(), source),
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: CalibrationSession = serde_json::from_str(text).map_err(|e| Error::json("calibration session", e))?;
        if s.version != SESSION_VERSION {
            return Err(Error::Schema(format!(
                "unsupported calibration session version {} (expected {SESSION_VERSION})",
                s.version
            )));
        }
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("session serializes")
    }
}

impl CalibrationResult {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let r: CalibrationResult =
            serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
        if r.version != RESULT_VERSION {
            return Err(Error::Schema(format!(
                "unsupported calibration result version {} (expected {RESULT_VERSION})",
                r.version
            )));
        }
        Ok(r)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }

    /// Rig model assembled from the estimates, with the given motor limit.
    pub fn to_rig(&self, limit: f64) -> RigModel {
        RigModel {
            pan_axis: self.pan_axis,
            tilt_axis: self.tilt_axis,
            rear_to_front: self.rear_to_front,
            front_to_proj: self.front_to_proj,
            front_device: self.front_device,
            rear_device: self.rear_device,
            proj_device: self.proj_device,
            limit,
        }
    }

    pub fn parameter_errors(&self, truth: &RigModel) -> ParameterErrors {
        let (rear_rotation, rear_translation_m) = self.rear_to_front.difference(&truth.rear_to_front);
        let (proj_rotation, proj_translation_m) = self.front_to_proj.difference(&truth.front_to_proj);
        let (e, t) = (&self.proj_device, &truth.proj_device);
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        ParameterErrors {
            pan_axis: self.pan_axis.angle_to(&truth.pan_axis),
            tilt_axis: self.tilt_axis.angle_to(&truth.tilt_axis),
            rear_rotation,
            rear_translation_m,
            proj_focal_rel: rel(e.fx, t.fx).max(rel(e.fy, t.fy)),
            proj_intrinsics_rel: [rel(e.fx, t.fx), rel(e.fy, t.fy), rel(e.cx, t.cx), rel(e.cy, t.cy)]
                .into_iter()
                .fold(0.0, f64::max),
            proj_rotation,
            proj_translation_m,
        }
    }

    /// Plain-text residual table.
    pub fn summary(&self) -> String {
        let r = &self.residuals;
        let mut out = String::new();
        out.push_str(&format!("{:<24}{:>16}\n", "residual", "value"));
        for (name, v) in [
            ("axis rms (m)", r.axis_rms_m),
            ("pan rms (m)", r.pan_rms_m),
            ("tilt rms (m)", r.tilt_rms_m),
            ("rear rms (m)", r.rear_rms_m),
            ("projector dlt rms (px)", r.proj_dlt_rms_px),
            ("projector rms (px)", r.proj_reproj_rms_px),
        ] {
            out.push_str(&format!("{name:<24}{v:>16.6e}\n"));
        }
        if let Some(e) = &self.errors {
            out.push_str(&format!("{:<24}{:>16}\n", "parameter error", "value"));
            for (name, v) in [
                ("pan axis (deg)", e.pan_axis.to_degrees()),
                ("tilt axis (deg)", e.tilt_axis.to_degrees()),
                ("rear rotation (deg)", e.rear_rotation.to_degrees()),
                ("rear translation (m)", e.rear_translation_m),
                ("projector focal (rel)", e.proj_focal_rel),
                ("projector rotation (deg)", e.proj_rotation.to_degrees()),
                ("projector translation (m)", e.proj_translation_m),
            ] {
                out.push_str(&format!("{name:<24}{v:>16.6e}\n"));
            }
        }
        out
    }
}

fn staged<T>(stage: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.at_stage(stage))
}

fn require<'a, T>(stage: &'static str, v: &'a Option<T>) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| {
        Error::InvalidArgument(format!("session has no {stage} observations")).at_stage(stage)
    })
}

fn axis_stage(kind: AxisKind, set: &Option<AxisObservationSet>) -> Result<super::AxisEstimate> {
    let stage = kind.stage();
    let set = require(stage, set)?;
    if set.which_axis != kind {
        return Err(Error::InvalidArgument(format!("observation set is labelled {:?}", set.which_axis)).at_stage(stage));
    }
    staged(stage, estimate_axis(set))
}

/// Runs pan axis, tilt axis, rear registration and projector calibration in
/// that order.
pub fn run_full_calibration(session: &CalibrationSession) -> Result<CalibrationResult> {
    let pan = axis_stage(AxisKind::Pan, &session.pan)?;
    let tilt = axis_stage(AxisKind::Tilt, &session.tilt)?;

    const REAR: &str = "rear registration";
    let rear = staged(
        REAR,
        register_rear_record(require(REAR, &session.rear)?, &pan.axis, &tilt.axis),
    )?;

    const PROJ: &str = "projector";
    let proj = staged(PROJ, calibrate_projector(require(PROJ, &session.projector)?))?;

    let count = |s: &Option<AxisObservationSet>| {
        s.as_ref()
            .map(|s| s.records.iter().map(|r| r.corners.len()).sum::<usize>())
            .unwrap_or(0) as f64
    };
    let (np, nt) = (count(&session.pan), count(&session.tilt));
    let axis_rms_m = ((pan.rms.powi(2) * np + tilt.rms.powi(2) * nt) / (np + nt).max(1.0)).sqrt();

    let mut result = CalibrationResult {
        version: RESULT_VERSION,
        pan_axis: pan.axis,
        tilt_axis: tilt.axis,
        rear_to_front: rear.rear_to_front,
        proj_device: proj.device,
        front_to_proj: proj.front_to_proj,
        front_device: session.front_device,
        rear_device: session.rear_device,
        residuals: Residuals {
            axis_rms_m,
            pan_rms_m: pan.rms,
            tilt_rms_m: tilt.rms,
            rear_rms_m: rear.rms,
            proj_reproj_rms_px: proj.rms_px,
            proj_dlt_rms_px: proj.dlt_rms_px,
        },
        errors: None,
    };
    if let Some(truth) = &session.ground_truth {
        result.errors = Some(result.parameter_errors(truth));
    }
    Ok(result)
}
