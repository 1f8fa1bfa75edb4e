use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Raycast, TriangleMesh};
use crate::exec::Exec;
use crate::geometry::{PinholeDevice, RigidTransform};
use crate::{Error, Result};

/// Default depth jump (meters) above which neighbouring depth samples are
/// not connected when meshing.
pub const DEFAULT_DISCONTINUITY_M: f64 = 0.05;

/// Per-pixel range image. `depth[p]` is the device-frame z of the sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: u32,
    pub height: u32,
    pub depth: Vec<f64>,
    pub valid: Vec<bool>,
}

impl DepthImage {
    pub fn invalid(width: u32, height: u32) -> Self {
        let n = width as usize * height as usize;
        DepthImage {
            width,
            height,
            depth: vec![0.0; n],
            valid: vec![false; n],
        }
    }

    pub fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    pub fn get(&self, x: u32, y: u32) -> Option<f64> {
        let i = self.index(x, y);
        self.valid[i].then(|| self.depth[i])
    }

    pub fn valid_fraction(&self) -> f64 {
        self.valid.iter().filter(|&&v| v).count() as f64 / self.valid.len().max(1) as f64
    }
}

/// Gaussian range noise plus the grazing-angle dropout band.
///
/// `γ` is the angle between the sensing ray and the surface plane (90° at
/// perpendicular incidence). Samples with `γ < gamma_full_dropout_deg` are
/// always invalid; the dropout probability falls linearly to zero at
/// `gamma_no_dropout_deg`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthNoiseModel {
    #[serde(default)]
    pub sigma: f64,
    #[serde(default = "default_full")]
    pub gamma_full_dropout_deg: f64,
    #[serde(default = "default_none")]
    pub gamma_no_dropout_deg: f64,
    #[serde(default = "default_true")]
    pub dropout: bool,
    #[serde(default)]
    pub seed: u64,
}

fn default_full() -> f64 {
    10.0
}
fn default_none() -> f64 {
    30.0
}
fn default_true() -> bool {
    true
}

impl Default for DepthNoiseModel {
    fn default() -> Self {
        DepthNoiseModel {
            sigma: 0.0,
            gamma_full_dropout_deg: default_full(),
            gamma_no_dropout_deg: default_none(),
            dropout: true,
            seed: 0,
        }
    }
}

impl DepthNoiseModel {
    /// Exact depth: no noise, no dropout.
    pub fn ideal() -> Self {
        DepthNoiseModel {
            dropout: false,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = (self.gamma_full_dropout_deg, self.gamma_no_dropout_deg);
        if !(0.0 <= a && a < b && b <= 90.0) {
            return Err(Error::InvalidArgument(format!(
                "dropout band must satisfy 0 <= {a} < {b} <= 90"
            )));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::InvalidArgument("depth noise sigma must be >= 0".into()));
        }
        Ok(())
    }

    /// Probability that a sample at grazing angle `gamma_deg` is invalid.
    pub fn dropout_probability(&self, gamma_deg: f64) -> f64 {
        if !self.dropout {
            return 0.0;
        }
        let (a, b) = (self.gamma_full_dropout_deg, self.gamma_no_dropout_deg);
        if gamma_deg < a {
            1.0
        } else if gamma_deg < b {
            (b - gamma_deg) / (b - a)
        } else {
            0.0
        }
    }
}

/// Synthesizes a depth image by casting one ray through every pixel center.
///
/// Random draws come from a ChaCha stream per image row, so the result does
/// not depend on how rows are scheduled.
pub fn sense_depth(
    scene: &impl Raycast,
    device: &PinholeDevice,
    device_to_world: &RigidTransform,
    noise: &DepthNoiseModel,
    exec: Exec,
) -> Result<DepthImage> {
    device.validate()?;
    noise.validate()?;
    let (w, h) = (device.width, device.height);
    let mut samples = vec![(0.0f64, false); device.pixel_count()];
    let origin = device_to_world.translation;
    exec.for_each_row(&mut samples, w as usize, |row, out| {
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        rng.set_stream(row as u64);
        for (col, slot) in out.iter_mut().enumerate() {
            // Both draws happen for every pixel so streams stay aligned.
            let u_drop: f64 = rng.random();
            let n: f64 = StandardNormal.sample(&mut rng);
            let local = device.ray(col as f64, row as f64);
            let dir = device_to_world.rotation * local;
            let Some(hit) = scene.raycast(&origin, &dir) else {
                continue;
            };
            let gamma = dir.dot(&hit.normal).abs().min(1.0).asin().to_degrees();
            if u_drop < noise.dropout_probability(gamma) {
                continue;
            }
            let z = hit.t * local.z + noise.sigma * n;
            if z > 0.0 {
                *slot = (z, true);
            }
        }
    });
    Ok(DepthImage {
        width: w,
        height: h,
        depth: samples.iter().map(|s| s.0).collect(),
        valid: samples.iter().map(|s| s.1).collect(),
    })
}

/// Triangulates a depth image in the device frame.
///
/// Each 2×2 block of pixels yields up to two triangles; a triangle is kept
/// only when its three samples are valid and no edge spans a depth jump
/// larger than `discontinuity`.
pub fn reconstruct_mesh(
    depth: &DepthImage,
    device: &PinholeDevice,
    discontinuity: f64,
) -> Result<TriangleMesh> {
    if depth.width != device.width || depth.height != device.height {
        return Err(Error::InvalidArgument(format!(
            "depth image {}x{} does not match device {}x{}",
            depth.width, depth.height, device.width, device.height
        )));
    }
    let (w, h) = (depth.width as usize, depth.height as usize);
    let mut index = vec![u32::MAX; w * h];
    let mut vertices = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if depth.valid[i] {
                index[i] = vertices.len() as u32;
                vertices.push(device.backproject(x as f64, y as f64, depth.depth[i])?);
            }
        }
    }
    let connected = |a: usize, b: usize| (depth.depth[a] - depth.depth[b]).abs() <= discontinuity;
    let mut faces = Vec::new();
    for y in 0..h.saturating_sub(1) {
        for x in 0..w.saturating_sub(1) {
            let a = y * w + x;
            let b = a + 1;
            let c = a + w;
            let d = c + 1;
            for [p, q, r] in [[a, b, c], [b, d, c]] {
                if depth.valid[p]
                    && depth.valid[q]
                    && depth.valid[r]
                    && connected(p, q)
                    && connected(q, r)
                    && connected(r, p)
                {
                    faces.push([index[p], index[q], index[r]]);
                }
            }
        }
    }
    Ok(TriangleMesh { vertices, faces })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{UnitAxis, Vec3};
    use crate::scene::{Scene, Shape, Surface};

    fn device() -> PinholeDevice {
        PinholeDevice::new(200.0, 200.0, 79.5, 59.5, 160, 120).unwrap()
    }

    fn frontal(z: f64) -> Surface {
        Surface::new(1, [1.0; 3], Shape::plane_from_point_normal(Vec3::new(0.0, 0.0, z), -Vec3::z(), None).unwrap())
    }

    #[test]
    fn frontal_plane_is_fully_valid() {
        let scene = Scene::new(vec![frontal(2.0)], vec![]).unwrap();
        let img = sense_depth(&scene, &device(), &RigidTransform::identity(), &DepthNoiseModel::default(), Exec::default()).unwrap();
        assert_eq!(img.valid_fraction(), 1.0);
        assert!((img.get(80, 60).unwrap() - 2.0).abs() < 1e-12);
    }

    /// Plane through (0,0,2) whose normal is rotated `90° − gamma` from the
    /// optical axis, so the central ray meets it at grazing angle `gamma`.
    fn tilted(gamma_deg: f64) -> Scene {
        let tilt = (90.0 - gamma_deg).to_radians();
        let n = crate::geometry::rotation_about_axis(&UnitAxis::y(), tilt) * -Vec3::z();
        Scene::new(vec![Surface::new(1, [1.0; 3], Shape::plane_from_point_normal(Vec3::new(0.0, 0.0, 2.0), n, None).unwrap())], vec![]).unwrap()
    }

    #[test]
    fn grazing_plane_fully_invalid() {
        // Narrow field of view keeps every ray within ±0.4° of the axis.
        let narrow = PinholeDevice::new(20000.0, 20000.0, 79.5, 59.5, 160, 120).unwrap();
        let img = sense_depth(&tilted(5.0), &narrow, &RigidTransform::identity(), &DepthNoiseModel::default(), Exec::default()).unwrap();
        assert_eq!(img.valid_fraction(), 0.0);
    }

    #[test]
    fn mid_band_dropout_rate() {
        // Ramp value at 20° is (30 − 20) / (30 − 10) = 0.5.
        let narrow = PinholeDevice::new(20000.0, 20000.0, 79.5, 59.5, 160, 120).unwrap();
        let noise = DepthNoiseModel { seed: 17, ..Default::default() };
        let img = sense_depth(&tilted(20.0), &narrow, &RigidTransform::identity(), &noise, Exec::default()).unwrap();
        let dropout = 1.0 - img.valid_fraction();
        assert!(img.valid.len() >= 10_000);
        assert!((dropout - 0.5).abs() < 0.05, "dropout {dropout}");
    }

    #[test]
    fn dropout_probability_is_monotone() {
        let m = DepthNoiseModel::default();
        let mut prev = 1.0;
        for k in 0..=900 {
            let p = m.dropout_probability(k as f64 * 0.1);
            assert!(p <= prev);
            prev = p;
        }
        assert_eq!(m.dropout_probability(9.99), 1.0);
        assert_eq!(m.dropout_probability(30.0), 0.0);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let noise = DepthNoiseModel { sigma: 0.01, seed: 3, ..Default::default() };
        let a = sense_depth(&tilted(25.0), &device(), &RigidTransform::identity(), &noise, Exec::Sequential).unwrap();
        let b = sense_depth(&tilted(25.0), &device(), &RigidTransform::identity(), &noise, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_band_rejected() {
        let m = DepthNoiseModel { gamma_full_dropout_deg: 30.0, gamma_no_dropout_deg: 10.0, ..Default::default() };
        assert!(m.validate().is_err());
    }

    #[test]
    fn empty_and_planar_meshes() {
        let d = device();
        let empty = reconstruct_mesh(&DepthImage::invalid(160, 120), &d, DEFAULT_DISCONTINUITY_M).unwrap();
        assert!(empty.is_empty());

        let scene = Scene::new(vec![frontal(2.0)], vec![]).unwrap();
        let img = sense_depth(&scene, &d, &RigidTransform::identity(), &DepthNoiseModel::ideal(), Exec::default()).unwrap();
        let mesh = reconstruct_mesh(&img, &d, DEFAULT_DISCONTINUITY_M).unwrap();
        assert_eq!(mesh.faces.len(), 2 * 159 * 119);
        assert!(mesh.vertices.iter().all(|v| (v.z - 2.0).abs() < 1e-9));
    }

    #[test]
    fn depth_gap_is_not_bridged() {
        // Left half sees a panel at 1 m, the rest the wall at 2 m.
        let panel = Surface::new(
            2,
            [1.0; 3],
            Shape::Box { pose: RigidTransform::from_translation(Vec3::new(-0.5, 0.0, 1.0)), dimensions: [1.0, 4.0, 0.001] },
        );
        let scene = Scene::new(vec![frontal(2.0), panel], vec![]).unwrap();
        let d = device();
        let img = sense_depth(&scene, &d, &RigidTransform::identity(), &DepthNoiseModel::ideal(), Exec::default()).unwrap();
        let mesh = reconstruct_mesh(&img, &d, DEFAULT_DISCONTINUITY_M).unwrap();
        let crossing = mesh
            .faces
            .iter()
            .filter(|f| {
                let zs: Vec<f64> = f.iter().map(|&i| mesh.vertices[i as usize].z).collect();
                zs.iter().any(|&z| z < 1.5) && zs.iter().any(|&z| z > 1.5)
            })
            .count();
        assert_eq!(crossing, 0);
        assert!(mesh.faces.len() > 2 * 150 * 100);
    }

    #[test]
    fn noiseless_depth_reproduces_hits() {
        let scene = tilted(60.0);
        let d = device();
        let pose = RigidTransform::from_axis_angle(&UnitAxis::x(), 0.05, Vec3::new(0.1, 0.0, -0.2));
        let img = sense_depth(&scene, &d, &pose, &DepthNoiseModel::ideal(), Exec::default()).unwrap();
        for (x, y) in [(0u32, 0u32), (80, 60), (159, 119), (13, 101)] {
            let local = d.backproject(x as f64, y as f64, img.get(x, y).unwrap()).unwrap();
            let world = pose.apply(&local);
            let hit = scene.raycast(&pose.translation, &(pose.rotation * d.ray(x as f64, y as f64))).unwrap();
            assert!((world - hit.point).norm() < 1e-9);
        }
    }
}
