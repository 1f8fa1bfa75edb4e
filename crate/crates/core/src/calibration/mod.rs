//! Rig calibration: motor axes, rear-camera mount, projector intrinsics and
//! pose, plus synthetic session generation.

mod axis;
mod lm;
mod projector;
mod rear;
mod session;
mod synth;

pub use axis::{estimate_axis, AxisEstimate, AxisKind, AxisObservationSet, AxisRecord};
pub use projector::{
    calibrate_projector, ProjectorCorrespondence, ProjectorCorrespondenceSet, ProjectorEstimate,
    MIN_CORRESPONDENCES,
};
pub use rear::{register_rear_camera, register_rear_record, RearEstimate, RearRegistrationRecord};
pub use session::{run_full_calibration, CalibrationResult, CalibrationSession, ParameterErrors, Residuals};
pub use synth::{simulate_session, ProjectionPlane, SessionConfig};

/// Serde adapter storing a radian value as degrees.
pub(crate) mod degrees {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(rad: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(rad.to_degrees())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        f64::deserialize(d).map(f64::to_radians)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rig::RigModel;
    use crate::Error;

    #[test]
    fn noiseless_session_round_trip() {
        let truth = RigModel::default_ground_truth();
        let session = simulate_session(&truth, &SessionConfig::noiseless()).unwrap();
        let result = run_full_calibration(&session).unwrap();
        let r = result.residuals;
        for v in [r.axis_rms_m, r.rear_rms_m, r.proj_reproj_rms_px] {
            assert!(v < 1e-6, "{r:?}");
        }
        let e = result.errors.unwrap();
        assert!(e.pan_axis < 1e-6 && e.tilt_axis < 1e-6, "{e:?}");
        assert!(e.rear_rotation < 1e-6 && e.rear_translation_m < 1e-6, "{e:?}");
        assert!(e.proj_intrinsics_rel < 1e-4, "{e:?}");
    }

    #[test]
    fn missing_tilt_names_stage() {
        let truth = RigModel::default_ground_truth();
        let mut session = simulate_session(&truth, &SessionConfig::noiseless()).unwrap();
        session.tilt = None;
        match run_full_calibration(&session) {
            Err(Error::Stage { stage, .. }) => assert_eq!(stage, "tilt axis"),
            other => panic!("expected stage error, got {other:?}"),
        }
    }

    #[test]
    fn session_file_round_trip() {
        let truth = RigModel::default_ground_truth();
        let session = simulate_session(&truth, &SessionConfig::default()).unwrap();
        let text = session.to_json();
        assert!(text.contains("theta_deg"));
        let back = CalibrationSession::from_json(&text).unwrap();
        let a = run_full_calibration(&session).unwrap();
        let b = run_full_calibration(&back).unwrap();
        assert!(a.pan_axis.angle_to(&b.pan_axis) < 1e-9);
    }

    #[test]
    fn noisy_projector_rms_near_noise_floor() {
        let truth = RigModel::default_ground_truth();
        let noisy = simulate_session(&truth, &SessionConfig::default()).unwrap();
        let clean = simulate_session(&truth, &SessionConfig::noiseless()).unwrap();
        // Floor: pixel displacement caused by the depth noise alone.
        let (n, c) = (noisy.projector.as_ref().unwrap(), clean.projector.as_ref().unwrap());
        let sq: f64 = n
            .records
            .iter()
            .zip(&c.records)
            .map(|(a, b)| {
                let pa = truth.proj_device.project(&truth.front_to_proj, &a.p_front).unwrap();
                let pb = truth.proj_device.project(&truth.front_to_proj, &b.p_front).unwrap();
                (pa.u - pb.u).powi(2) + (pa.v - pb.v).powi(2)
            })
            .sum();
        let floor = (sq / n.records.len() as f64).sqrt();
        let result = run_full_calibration(&noisy).unwrap();
        assert!(result.residuals.proj_reproj_rms_px <= 3.0 * floor, "{} vs floor {floor}", result.residuals.proj_reproj_rms_px);
    }
}
