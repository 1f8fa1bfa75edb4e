//! Closing the loop: what a camera at the user's eye sees once the
//! framebuffer is projected into the real scene, and where individual
//! pattern corners end up.

use super::image::{to_rgb, RasterImage};
use super::pass2::texture_coordinate;
use crate::exec::Exec;
use crate::geometry::{PinholeDevice, RigidTransform, Vec3};
use crate::scene::{Raycast, Scene};
use crate::upr::{UprMatrix, Viewport};
use crate::Result;

/// Fraction of albedo visible without projector light.
pub const AMBIENT: f64 = 0.2;

/// Relative slack when comparing ray lengths for shadow and occlusion tests.
const VISIBILITY_TOLERANCE: f64 = 1e-6;

/// A device with its pose in the world.
#[derive(Debug, Clone, Copy)]
pub struct PosedDevice {
    pub device: PinholeDevice,
    pub to_world: RigidTransform,
}

impl PosedDevice {
    pub fn new(device: PinholeDevice, to_world: RigidTransform) -> Self {
        PosedDevice { device, to_world }
    }

    pub fn center(&self) -> Vec3 {
        self.to_world.translation
    }

    pub fn ray(&self, u: f64, v: f64) -> Vec3 {
        self.to_world.rotation * self.device.ray(u, v)
    }

    /// Pixel of a world point, if it is in front of the device.
    pub fn project(&self, p_world: &Vec3) -> Option<[f64; 2]> {
        self.device
            .project(&self.to_world.inverse(), p_world)
            .ok()
            .map(|p| [p.u, p.v])
    }
}

/// True when nothing in `scene` lies between `from` and `to`.
fn unobstructed(scene: &impl Raycast, from: &Vec3, to: &Vec3) -> bool {
    let d = to - from;
    let dist = d.norm();
    if dist == 0.0 {
        return true;
    }
    match scene.raycast(from, &(d / dist)) {
        Some(hit) => hit.t >= dist * (1.0 - VISIBILITY_TOLERANCE) - VISIBILITY_TOLERANCE,
        None => true,
    }
}

/// Renders the real scene as seen by `user` while the projector shows
/// `framebuffer`: `255·ρ·(AMBIENT + (1 − AMBIENT)·L)` where `L` is the
/// projector light reaching the point (zero when in shadow or outside the
/// projector frustum). Rays that miss the scene are black.
pub fn simulate_projection_and_view(
    scene: &Scene,
    framebuffer: &RasterImage,
    projector: &PosedDevice,
    user: &PosedDevice,
    exec: Exec,
) -> Result<RasterImage> {
    let (w, h) = (user.device.width, user.device.height);
    let mut out = RasterImage::new(w, h)?;
    let eye = user.center();
    let pc = projector.center();
    // Framebuffer may differ in size from the device raster; map pixel
    // centers proportionally.
    let sx = framebuffer.width() as f64 / projector.device.width as f64;
    let sy = framebuffer.height() as f64 / projector.device.height as f64;
    exec.for_each_row(out.data_mut(), w as usize * 3, |y, row| {
        for x in 0..w as usize {
            let dir = user.ray(x as f64, y as f64);
            let Some(hit) = scene.raycast(&eye, &dir) else {
                continue;
            };
            let albedo = scene.surface(hit.surface_id).map(|s| s.albedo).unwrap_or([0.0; 3]);
            let mut light = [0.0; 3];
            if let Some([u, v]) = projector.project(&hit.point) {
                if projector.device.contains(u, v) && unobstructed(scene, &pc, &hit.point) {
                    let fu = (u + 0.5) * sx - 0.5;
                    let fv = (v + 0.5) * sy - 0.5;
                    if let Some(c) = framebuffer.sample_bilinear(fu, fv) {
                        light = c.map(|c| c / 255.0);
                    }
                }
            }
            let c = [0, 1, 2].map(|k| 255.0 * albedo[k] * (AMBIENT + (1.0 - AMBIENT) * light[k]));
            row[x * 3..x * 3 + 3].copy_from_slice(&to_rgb(c));
        }
    });
    Ok(out)
}

/// Why a corner could not be followed to the user's image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unresolved {
    /// The eye ray through the corner misses the reconstructed geometry.
    NoGeometry,
    /// The geometry point is outside the projector image.
    OutsideProjector,
    /// The projector pixel shows some other part of the geometry.
    HiddenFromProjector,
    /// The projector ray misses the real scene.
    NoSurface,
    /// The lit point is hidden from the user's eye.
    Occluded,
}

/// Everything needed to follow a pattern corner from the pass-1 image to the
/// user's camera. The `estimated` projector drives the correction; the
/// `actual` projector and `scene` model the physical world.
pub struct CornerPath<'a, G: Raycast> {
    pub geometry: &'a G,
    pub scene: &'a Scene,
    pub upr: &'a UprMatrix,
    pub viewport: &'a Viewport,
    pub estimated: PosedDevice,
    pub actual: PosedDevice,
    pub user: PosedDevice,
}

impl<G: Raycast> CornerPath<'_, G> {
    /// Projector pixel that displays the pass-1 point `raster` once warped.
    pub fn corrected_projector_pixel(&self, raster: [f64; 2]) -> Result<[f64; 2], Unresolved> {
        let eye = self.upr.eye_world();
        let target = self.upr.screen_to_world(self.viewport.from_raster(raster));
        let dir = (target - eye).normalize();
        let hit = self.geometry.raycast(&eye, &dir).ok_or(Unresolved::NoGeometry)?;
        let px = self.estimated.project(&hit.point).ok_or(Unresolved::OutsideProjector)?;
        if !self.estimated.device.contains(px[0], px[1]) {
            return Err(Unresolved::OutsideProjector);
        }
        // The warp assigns this pixel the texture of the first geometry hit
        // along its ray; that must be the point we started from.
        let origin = self.estimated.center();
        if !unobstructed(self.geometry, &origin, &hit.point) {
            return Err(Unresolved::HiddenFromProjector);
        }
        debug_assert!(texture_coordinate(&hit.point, self.upr, self.viewport).is_some());
        Ok(px)
    }

    /// Without correction the projector shows pass 1 unchanged.
    pub fn uncorrected_projector_pixel(&self, raster: [f64; 2]) -> Result<[f64; 2], Unresolved> {
        let sx = self.actual.device.width as f64 / self.viewport.width_px as f64;
        let sy = self.actual.device.height as f64 / self.viewport.height_px as f64;
        let px = [(raster[0] + 0.5) * sx - 0.5, (raster[1] + 0.5) * sy - 0.5];
        if !self.actual.device.contains(px[0], px[1]) {
            return Err(Unresolved::OutsideProjector);
        }
        Ok(px)
    }

    /// Where light leaving projector pixel `px` appears to the user.
    pub fn user_pixel(&self, px: [f64; 2]) -> Result<[f64; 2], Unresolved> {
        let origin = self.actual.center();
        let dir = self.actual.ray(px[0], px[1]);
        let hit = self.scene.raycast(&origin, &dir).ok_or(Unresolved::NoSurface)?;
        if !unobstructed(self.scene, &self.user.center(), &hit.point) {
            return Err(Unresolved::Occluded);
        }
        self.user.project(&hit.point).ok_or(Unresolved::Occluded)
    }

    pub fn propagate(&self, raster: [f64; 2], correction: bool) -> Result<[f64; 2], Unresolved> {
        let px = if correction {
            self.corrected_projector_pixel(raster)?
        } else {
            self.uncorrected_projector_pixel(raster)?
        };
        self.user_pixel(px)
    }
}

/// Follows every corner; unresolved corners keep their reason.
pub fn propagate_corners<G: Raycast>(
    corners: &[(usize, [f64; 2])],
    path: &CornerPath<'_, G>,
    correction: bool,
) -> Vec<(usize, Result<[f64; 2], Unresolved>)> {
    corners.iter().map(|&(k, c)| (k, path.propagate(c, correction))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::UnitAxis;
    use crate::scene::{Shape, Surface, TriangleMesh};
    use crate::upr::{upr_matrix, EyePose};
    use crate::warp::pass2::WorldGeometry;
    use crate::warp::CheckerPattern;

    fn frontal_plane(id: u32, z: f64, extent: Option<[f64; 2]>, albedo: [f64; 3]) -> Surface {
        let pose = RigidTransform::from_axis_angle(&UnitAxis::x(), std::f64::consts::PI, Vec3::new(0.0, 0.0, z));
        Surface::new(id, albedo, Shape::Plane { pose, extent })
    }

    fn camera() -> PinholeDevice {
        PinholeDevice::new(100.0, 100.0, 39.5, 29.5, 80, 60).unwrap()
    }

    #[test]
    fn black_framebuffer_gives_ambient_albedo() {
        let scene = Scene::new(vec![frontal_plane(1, 2.0, None, [0.5, 1.0, 0.25])], vec![]).unwrap();
        let fb = RasterImage::new(80, 60).unwrap();
        let p = PosedDevice::new(camera(), RigidTransform::identity());
        let img = simulate_projection_and_view(&scene, &fb, &p, &p, Exec::Sequential).unwrap();
        assert_eq!(img.pixel(40, 30), to_rgb([25.5, 51.0, 12.75]));
        assert_eq!(img.pixel(0, 0), img.pixel(79, 59));
    }

    #[test]
    fn white_framebuffer_lights_plane_uniformly() {
        let scene = Scene::new(vec![frontal_plane(1, 2.0, None, [1.0; 3])], vec![]).unwrap();
        let fb = RasterImage::filled(80, 60, [255; 3]).unwrap();
        let p = PosedDevice::new(camera(), RigidTransform::identity());
        let img = simulate_projection_and_view(&scene, &fb, &p, &p, Exec::Parallel).unwrap();
        assert_eq!(img, RasterImage::filled(80, 60, [255; 3]).unwrap());
    }

    #[test]
    fn shadow_matches_frustum_footprint() {
        // A 0.4 m square occluder 1 m in front of the projector casts a
        // 1.2 m square shadow on the wall 3 m away.
        let scene = Scene::new(
            vec![frontal_plane(1, 3.0, None, [1.0; 3]), frontal_plane(2, 1.0, Some([0.4, 0.4]), [0.0; 3])],
            vec![],
        )
        .unwrap();
        let proj = PosedDevice::new(PinholeDevice::new(200.0, 200.0, 99.5, 99.5, 200, 200).unwrap(), RigidTransform::identity());
        let user = PosedDevice::new(
            PinholeDevice::new(150.0, 150.0, 99.5, 99.5, 200, 200).unwrap(),
            RigidTransform::from_translation(Vec3::new(0.6, 0.0, -0.5)),
        );
        let fb = RasterImage::filled(200, 200, [255; 3]).unwrap();
        let img = simulate_projection_and_view(&scene, &fb, &proj, &user, Exec::Parallel).unwrap();
        let lit = to_rgb([255.0; 3]);
        let mut mismatches_far_from_edge = 0;
        let mut checked = 0;
        for y in 0..200 {
            for x in 0..200 {
                let dir = user.ray(x as f64, y as f64);
                let o = user.center();
                let t = (3.0 - o.z) / dir.z;
                let p = o + dir * t;
                // Skip pixels where the occluder itself is seen.
                let t1 = (1.0 - o.z) / dir.z;
                let q = o + dir * t1;
                if q.x.abs() <= 0.2 && q.y.abs() <= 0.2 {
                    continue;
                }
                // Outside the projector frustum nothing is lit either way.
                if p.x.abs() > 1.45 || p.y.abs() > 1.45 {
                    continue;
                }
                let in_shadow = p.x.abs() <= 0.6 && p.y.abs() <= 0.6;
                let edge_dist = (p.x.abs() - 0.6).abs().min((p.y.abs() - 0.6).abs());
                // Wall size of one user pixel here.
                let pixel_m = t * dir.z / 150.0;
                let rendered_shadow = img.pixel(x, y) != lit;
                checked += 1;
                if rendered_shadow != in_shadow && edge_dist > pixel_m {
                    mismatches_far_from_edge += 1;
                }
            }
        }
        assert!(checked > 10_000);
        assert_eq!(mismatches_far_from_edge, 0);
    }

    #[test]
    fn identity_pipeline_keeps_corners() {
        let eye = EyePose::default_user();
        let upr = upr_matrix(&eye, &RigidTransform::identity()).unwrap();
        let vp = Viewport::for_eye(&eye, 320, 180);
        let (cam, cam_to_rear) = vp.user_camera(&eye).unwrap();
        let s = 10.0;
        let mesh = TriangleMesh::new(
            vec![Vec3::new(-s, -s, 0.0), Vec3::new(s, -s, 0.0), Vec3::new(-s, s, 0.0), Vec3::new(s, s, 0.0)],
            vec![[0, 1, 2], [1, 3, 2]],
        )
        .unwrap();
        let geometry = WorldGeometry::from_mesh(mesh);
        let scene = Scene::new(vec![frontal_plane(1, 0.0, None, [1.0; 3])], vec![]).unwrap();
        let user = PosedDevice::new(cam, cam_to_rear);
        let path = CornerPath {
            geometry: &geometry,
            scene: &scene,
            upr: &upr,
            viewport: &vp,
            estimated: user,
            actual: user,
            user,
        };
        let corners = CheckerPattern::new(5, 7, 20).unwrap().corners(320, 180);
        for (k, r) in propagate_corners(&corners, &path, true) {
            let got = r.unwrap();
            let want = corners[k].1;
            assert!((got[0] - want[0]).abs() < 1e-9 && (got[1] - want[1]).abs() < 1e-9);
        }
    }
}
