//! Projector calibration from projected-pattern correspondences: normalized
//! DLT, RQ decomposition into intrinsics and pose, then reprojection
//! refinement over all eleven parameters.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Matrix3x4, Rotation3, SVD};
use serde::{Deserialize, Serialize};

use super::lm::{minimize, LeastSquares, LmOptions};
use crate::geometry::{skew, Mat3, PinholeDevice, RigidTransform, Vec3};
use crate::{Error, Result};

/// One projector pixel and the front-camera point it lands on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectorCorrespondence {
    pub x_proj: [f64; 2],
    pub p_front: Vec3,
    pub plane_id: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectorCorrespondenceSet {
    /// Projector resolution, needed to build a valid device.
    pub width: u32,
    pub height: u32,
    pub records: Vec<ProjectorCorrespondence>,
}

#[derive(Debug, Clone, Copy)]
pub struct ProjectorEstimate {
    pub device: PinholeDevice,
    pub front_to_proj: RigidTransform,
    /// Reprojection RMS of the refined solution, pixels.
    pub rms_px: f64,
    /// Reprojection RMS straight after decomposition, pixels.
    pub dlt_rms_px: f64,
}

pub const MIN_CORRESPONDENCES: usize = 6;

/// Two plane normals closer than this are treated as parallel.
const PARALLEL_TOLERANCE_DEG: f64 = 0.5;
const COPLANAR_RATIO: f64 = 1e-9;

fn plane_fit(points: &[Vec3]) -> Option<(Vec3, [f64; 3])> {
    if points.len() < 3 {
        return None;
    }
    let c = points.iter().fold(Vec3::zeros(), |s, p| s + p) / points.len() as f64;
    let scatter = points.iter().fold(Mat3::zeros(), |s, p| {
        let d = p - c;
        s + d * d.transpose()
    });
    let svd = SVD::new(scatter, true, false);
    let sv = svd.singular_values;
    let u = svd.u?;
    let mut order = [0, 1, 2];
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    Some((u.column(order[2]).into_owned(), [sv[order[0]], sv[order[1]], sv[order[2]]]))
}

impl ProjectorCorrespondenceSet {
    pub fn validate(&self) -> Result<()> {
        let n = self.records.len();
        if n < MIN_CORRESPONDENCES {
            return Err(Error::Underdetermined {
                needed: MIN_CORRESPONDENCES,
                got: n,
            });
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidArgument("projector resolution must be nonzero".into()));
        }
        let all: Vec<Vec3> = self.records.iter().map(|r| r.p_front).collect();
        match plane_fit(&all) {
            Some((_, sv)) if sv[2] > COPLANAR_RATIO * sv[0] => {}
            _ => return Err(Error::Degenerate("all correspondences are coplanar".into())),
        }
        let mut groups: BTreeMap<u32, Vec<Vec3>> = BTreeMap::new();
        for r in &self.records {
            groups.entry(r.plane_id).or_default().push(r.p_front);
        }
        let normals: Vec<Vec3> = groups
            .values()
            .filter_map(|pts| plane_fit(pts))
            .filter(|(_, sv)| sv[1] > COPLANAR_RATIO * sv[0])
            .map(|(n, _)| n)
            .collect();
        let cos_tol = PARALLEL_TOLERANCE_DEG.to_radians().cos();
        let distinct = normals
            .iter()
            .any(|n| normals.iter().any(|m| n.dot(m).abs() < cos_tol));
        if !distinct {
            return Err(Error::Degenerate(
                "projector correspondences need at least two non-parallel planes".into(),
            ));
        }
        Ok(())
    }
}

/// Similarity that moves the centroid to the origin and scales the mean
/// distance to `sqrt(dim)`.
fn normalizing_scale<const D: usize>(points: &[[f64; D]]) -> ([f64; D], f64) {
    let n = points.len() as f64;
    let mut c = [0.0; D];
    for p in points {
        for i in 0..D {
            c[i] += p[i] / n;
        }
    }
    let mean_dist = points
        .iter()
        .map(|p| (0..D).map(|i| (p[i] - c[i]).powi(2)).sum::<f64>().sqrt())
        .sum::<f64>()
        / n;
    (c, (D as f64).sqrt() / mean_dist)
}

fn dlt(set: &ProjectorCorrespondenceSet) -> Result<Matrix3x4<f64>> {
    let pix: Vec<[f64; 2]> = set.records.iter().map(|r| r.x_proj).collect();
    let pts: Vec<[f64; 3]> = set.records.iter().map(|r| [r.p_front.x, r.p_front.y, r.p_front.z]).collect();
    let (pc, ps) = normalizing_scale(&pix);
    let (xc, xs) = normalizing_scale(&pts);

    let n = set.records.len();
    let mut a = DMatrix::<f64>::zeros(2 * n, 12);
    for (i, (x, p)) in pix.iter().zip(&pts).enumerate() {
        let u = (x[0] - pc[0]) * ps;
        let v = (x[1] - pc[1]) * ps;
        let q = [(p[0] - xc[0]) * xs, (p[1] - xc[1]) * xs, (p[2] - xc[2]) * xs, 1.0];
        for j in 0..4 {
            a[(2 * i, j)] = q[j];
            a[(2 * i, 8 + j)] = -u * q[j];
            a[(2 * i + 1, 4 + j)] = q[j];
            a[(2 * i + 1, 8 + j)] = -v * q[j];
        }
    }
    // The null vector of A is the eigenvector of AᵀA with smallest eigenvalue.
    let ata = a.transpose() * &a;
    let svd = SVD::new(ata, false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Decomposition("DLT SVD failed".into()))?;
    let k = svd.singular_values.imin();
    let h = v_t.row(k);
    let m_norm = Matrix3x4::from_fn(|r, c| h[4 * r + c]);

    let t_pix_inv = Mat3::new(1.0 / ps, 0.0, pc[0], 0.0, 1.0 / ps, pc[1], 0.0, 0.0, 1.0);
    let mut t_pts = nalgebra::Matrix4::<f64>::identity() * xs;
    t_pts[(3, 3)] = 1.0;
    for i in 0..3 {
        t_pts[(i, 3)] = -xs * xc[i];
    }
    Ok(t_pix_inv * m_norm * t_pts)
}

/// Splits `M = K·[R | t]` with `K` upper triangular, positive diagonal,
/// `K₂₂ = 1` and `det R = +1`.
pub(crate) fn decompose(m: &Matrix3x4<f64>) -> Result<(Mat3, Mat3, Vec3)> {
    let mut m = *m;
    if m.fixed_view::<3, 3>(0, 0).determinant() < 0.0 {
        m = -m;
    }
    let b: Mat3 = m.fixed_view::<3, 3>(0, 0).into_owned();
    let flip = Mat3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0);
    let qr = (flip * b).transpose().qr();
    let (q, r) = (qr.q(), qr.r());
    let mut k = flip * r.transpose() * flip;
    let mut rot = flip * q.transpose();
    let signs = Mat3::from_diagonal(&Vec3::new(k[(0, 0)].signum(), k[(1, 1)].signum(), k[(2, 2)].signum()));
    k *= signs;
    rot = signs * rot;
    let scale = k[(2, 2)];
    if !(scale > 0.0) || !(k[(0, 0)] > 0.0) || !(k[(1, 1)] > 0.0) {
        return Err(Error::Decomposition("decomposition produced a non-positive focal length".into()));
    }
    let t = k.try_inverse().ok_or_else(|| Error::Decomposition("singular intrinsics".into()))?
        * m.column(3);
    k /= scale;
    if rot.determinant() < 0.0 {
        return Err(Error::Decomposition("rotation has negative determinant".into()));
    }
    Ok((k, rot, t))
}

#[derive(Debug, Clone)]
struct ProjParams {
    intr: [f64; 5],
    rotation: Mat3,
    translation: Vec3,
}

struct Reprojection<'a> {
    set: &'a ProjectorCorrespondenceSet,
}

impl LeastSquares for Reprojection<'_> {
    type Params = ProjParams;

    fn evaluate(&self, p: &ProjParams) -> (DVector<f64>, DMatrix<f64>) {
        let [fx, fy, cx, cy, s] = p.intr;
        let n = self.set.records.len();
        let mut res = DVector::zeros(2 * n);
        let mut jac = DMatrix::zeros(2 * n, 11);
        for (i, rec) in self.set.records.iter().enumerate() {
            let rp = p.rotation * rec.p_front;
            let q = rp + p.translation;
            let (x, y) = (q.x / q.z, q.y / q.z);
            res[2 * i] = fx * x + s * y + cx - rec.x_proj[0];
            res[2 * i + 1] = fy * y + cy - rec.x_proj[1];

            let z = q.z;
            let du_dq = nalgebra::RowVector3::new(fx / z, s / z, -(fx * x + s * y) / z);
            let dv_dq = nalgebra::RowVector3::new(0.0, fy / z, -fy * y / z);
            let dq_dw = -skew(&rp);
            let (ru, rv) = (2 * i, 2 * i + 1);
            jac[(ru, 0)] = x;
            jac[(ru, 2)] = 1.0;
            jac[(ru, 4)] = y;
            jac[(rv, 1)] = y;
            jac[(rv, 3)] = 1.0;
            let du_dw = du_dq * dq_dw;
            let dv_dw = dv_dq * dq_dw;
            for c in 0..3 {
                jac[(ru, 5 + c)] = du_dw[c];
                jac[(rv, 5 + c)] = dv_dw[c];
                jac[(ru, 8 + c)] = du_dq[c];
                jac[(rv, 8 + c)] = dv_dq[c];
            }
        }
        (res, jac)
    }

    fn residuals(&self, p: &ProjParams) -> DVector<f64> {
        let [fx, fy, cx, cy, s] = p.intr;
        let mut res = DVector::zeros(2 * self.set.records.len());
        for (i, rec) in self.set.records.iter().enumerate() {
            let q = p.rotation * rec.p_front + p.translation;
            let (x, y) = (q.x / q.z, q.y / q.z);
            res[2 * i] = fx * x + s * y + cx - rec.x_proj[0];
            res[2 * i + 1] = fy * y + cy - rec.x_proj[1];
        }
        res
    }

    fn retract(&self, p: &ProjParams, step: &DVector<f64>) -> ProjParams {
        let mut intr = p.intr;
        for (i, v) in intr.iter_mut().enumerate() {
            *v += step[i];
        }
        let w = Vec3::new(step[5], step[6], step[7]);
        ProjParams {
            intr,
            rotation: Rotation3::new(w).into_inner() * p.rotation,
            translation: p.translation + Vec3::new(step[8], step[9], step[10]),
        }
    }

    fn flatten(&self, p: &ProjParams) -> Vec<f64> {
        let mut out = p.intr.to_vec();
        out.extend(Rotation3::from_matrix_unchecked(p.rotation).scaled_axis().iter());
        out.extend(p.translation.iter());
        out
    }
}

fn to_device(intr: &[f64; 5], width: u32, height: u32) -> Result<PinholeDevice> {
    let [fx, fy, cx, cy, s] = *intr;
    PinholeDevice::with_skew(fx, fy, cx, cy, s, width, height)
        .map_err(|e| Error::Decomposition(format!("estimated projector intrinsics invalid: {e}")))
}

/// Estimates projector intrinsics and the front-to-projector pose.
pub fn calibrate_projector(set: &ProjectorCorrespondenceSet) -> Result<ProjectorEstimate> {
    set.validate()?;
    let m = dlt(set)?;
    let (k, rotation, translation) = decompose(&m)?;
    let init = ProjParams {
        intr: [k[(0, 0)], k[(1, 1)], k[(0, 2)], k[(1, 2)], k[(0, 1)]],
        rotation,
        translation,
    };
    let problem = Reprojection { set };
    let n = set.records.len() as f64;
    let dlt_rms_px = (problem.residuals(&init).norm_squared() / n).sqrt();
    let report = minimize(&problem, init, LmOptions::default())?;
    let rms_px = report.rms(2);
    let p = report.params;
    // Re-orthonormalize against drift from repeated left-multiplication.
    let rotation = Rotation3::from_matrix(&p.rotation).into_inner();
    Ok(ProjectorEstimate {
        device: to_device(&p.intr, set.width, set.height)?,
        front_to_proj: RigidTransform {
            rotation,
            translation: p.translation,
        },
        rms_px,
        dlt_rms_px,
    })
}
