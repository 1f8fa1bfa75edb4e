//! Motor-axis estimation from a checkerboard observed while the platform
//! turns about one axis.
//!
//! Each corner, seen from the rotating camera, traces a circle in a plane
//! perpendicular to the axis. The initial axis averages per-corner plane
//! normals; refinement minimizes the spread of the corners' reconstructed
//! world positions, `Σ_k Σ_i ‖R_a(θ_k)·p_ki − p̄_i‖²`, over the two
//! spherical angles of `a`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SVD};
use serde::{Deserialize, Serialize};

use super::lm::{minimize, LeastSquares, LmOptions};
use crate::geometry::{rotation_about_axis, rotation_axis_derivative, Mat3, UnitAxis, Vec3};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisKind {
    Pan,
    Tilt,
}

impl AxisKind {
    pub fn stage(self) -> &'static str {
        match self {
            AxisKind::Pan => "pan axis",
            AxisKind::Tilt => "tilt axis",
        }
    }
}

/// Corners seen at one motor angle; points are in the front-camera frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisRecord {
    #[serde(rename = "theta_deg", with = "super::degrees")]
    pub theta: f64,
    pub corners: Vec<(usize, Vec3)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisObservationSet {
    pub which_axis: AxisKind,
    pub records: Vec<AxisRecord>,
}

#[derive(Debug, Clone, Copy)]
pub struct AxisEstimate {
    pub axis: UnitAxis,
    /// RMS distance (meters) of reconstructed corners from their mean.
    pub rms: f64,
}

impl AxisObservationSet {
    pub fn validate(&self) -> Result<()> {
        let mut angles: Vec<f64> = self.records.iter().map(|r| r.theta).collect();
        angles.sort_by(f64::total_cmp);
        angles.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        if angles.len() < 3 {
            return Err(Error::Degenerate(format!(
                "axis estimation needs at least 3 distinct angles, got {}",
                angles.len()
            )));
        }
        if let Some(r) = self.records.iter().find(|r| r.corners.len() < 4) {
            return Err(Error::Degenerate(format!(
                "record at {:.3} deg has {} corners (need 4)",
                r.theta.to_degrees(),
                r.corners.len()
            )));
        }
        Ok(())
    }

    /// Per-corner tracks: `(record angle, point)` lists with at least two entries.
    fn tracks(&self) -> Vec<Vec<(f64, Vec3)>> {
        let mut by_corner: BTreeMap<usize, Vec<(f64, Vec3)>> = BTreeMap::new();
        for r in &self.records {
            for (k, p) in &r.corners {
                by_corner.entry(*k).or_default().push((r.theta, *p));
            }
        }
        by_corner.into_values().filter(|t| t.len() >= 2).collect()
    }
}

struct AxisProblem {
    tracks: Vec<Vec<(f64, Vec3)>>,
    /// Spherical frame: the initial axis is `b1`.
    basis: [Vec3; 3],
}

impl AxisProblem {
    fn axis(&self, p: &[f64; 2]) -> (Vec3, Vec3, Vec3) {
        let [b1, b2, b3] = self.basis;
        let (sp, cp) = p[0].sin_cos();
        let (sl, cl) = p[1].sin_cos();
        let a = b1 * (sp * cl) + b2 * (sp * sl) + b3 * cp;
        let da_dphi = b1 * (cp * cl) + b2 * (cp * sl) - b3 * sp;
        let da_dlambda = b1 * (-sp * sl) + b2 * (sp * cl);
        (a, da_dphi, da_dlambda)
    }

    fn residuals_for(&self, a: &Vec3) -> DVector<f64> {
        let axis = UnitAxis::normalize(*a).expect("unit axis");
        let n: usize = self.tracks.iter().map(|t| t.len()).sum();
        let mut out = DVector::zeros(3 * n);
        let mut row = 0;
        for track in &self.tracks {
            let world: Vec<Vec3> = track
                .iter()
                .map(|(theta, p)| rotation_about_axis(&axis, *theta) * p)
                .collect();
            let mean = world.iter().fold(Vec3::zeros(), |s, w| s + w) / world.len() as f64;
            for w in &world {
                out.fixed_rows_mut::<3>(row).copy_from(&(w - mean));
                row += 3;
            }
        }
        out
    }
}

impl LeastSquares for AxisProblem {
    type Params = [f64; 2];

    fn evaluate(&self, p: &[f64; 2]) -> (DVector<f64>, DMatrix<f64>) {
        let (a, d_phi, d_lambda) = self.axis(p);
        let residuals = self.residuals_for(&a);
        let mut jac = DMatrix::zeros(residuals.len(), 2);
        let mut row = 0;
        for track in &self.tracks {
            let derivs: Vec<[Vec3; 2]> = track
                .iter()
                .map(|(theta, q)| {
                    [
                        rotation_axis_derivative(&a, &d_phi, *theta) * q,
                        rotation_axis_derivative(&a, &d_lambda, *theta) * q,
                    ]
                })
                .collect();
            let m = track.len() as f64;
            let mean = derivs
                .iter()
                .fold([Vec3::zeros(); 2], |s, d| [s[0] + d[0], s[1] + d[1]]);
            for d in &derivs {
                for c in 0..2 {
                    jac.fixed_view_mut::<3, 1>(row, c).copy_from(&(d[c] - mean[c] / m));
                }
                row += 3;
            }
        }
        (residuals, jac)
    }

    fn residuals(&self, p: &[f64; 2]) -> DVector<f64> {
        self.residuals_for(&self.axis(p).0)
    }

    fn retract(&self, p: &[f64; 2], step: &DVector<f64>) -> [f64; 2] {
        [p[0] + step[0], p[1] + step[1]]
    }

    fn flatten(&self, p: &[f64; 2]) -> Vec<f64> {
        let a = self.axis(p).0;
        vec![a.x, a.y, a.z]
    }
}

/// Weighted average of per-corner circle-plane normals.
fn initial_axis(tracks: &[Vec<(f64, Vec3)>]) -> Result<Vec3> {
    let mut acc = Vec3::zeros();
    let mut reference: Option<Vec3> = None;
    for track in tracks.iter().filter(|t| t.len() >= 3) {
        let center = track.iter().fold(Vec3::zeros(), |s, (_, p)| s + p) / track.len() as f64;
        let scatter = track.iter().fold(Mat3::zeros(), |s, (_, p)| {
            let d = p - center;
            s + d * d.transpose()
        });
        let svd = SVD::new(scatter, true, false);
        let spread = svd.singular_values[1];
        let scale = center.norm_squared().max(1e-6);
        if !(spread > 1e-14 * scale) {
            continue;
        }
        let mut n: Vec3 = svd.u.expect("u computed").column(2).into_owned();
        match reference {
            Some(r) if n.dot(&r) < 0.0 => n = -n,
            None => reference = Some(n),
            _ => {}
        }
        acc += n * spread;
    }
    acc.try_normalize(1e-300).ok_or_else(|| {
        Error::Degenerate("corner trajectories do not span a plane (corners on the axis?)".into())
    })
}

fn orthonormal_basis(a: &Vec3) -> [Vec3; 3] {
    let helper = if a.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let b2 = a.cross(&helper).normalize();
    let b3 = a.cross(&b2);
    [*a, b2, b3]
}

/// Estimates the rotation axis (through the world origin) of one motor.
pub fn estimate_axis(obs: &AxisObservationSet) -> Result<AxisEstimate> {
    obs.validate()?;
    let tracks = obs.tracks();
    let init = initial_axis(&tracks)?;
    // The plane normal has no preferred sign: keep whichever direction makes
    // positive angles rotate the corners consistently.
    let candidates = [init, -init].map(|a| {
        let problem = AxisProblem {
            tracks: tracks.clone(),
            basis: orthonormal_basis(&a),
        };
        let cost = problem.residuals_for(&a).norm_squared();
        (problem, cost)
    });
    let [(p0, c0), (p1, c1)] = candidates;
    let problem = if c0 <= c1 { p0 } else { p1 };
    let start = [std::f64::consts::FRAC_PI_2, 0.0];
    let report = minimize(&problem, start, LmOptions::default())?;
    let axis = UnitAxis::normalize(problem.axis(&report.params).0)?;
    Ok(AxisEstimate {
        axis,
        rms: report.rms(3),
    })
}
