//! Pass 2: projective texture mapping of the pass-1 image onto the sensed
//! geometry, evaluated per projector pixel.

use super::image::{to_rgb, RasterImage};
use crate::exec::Exec;
use crate::geometry::{PinholeDevice, RigidTransform, Vec3};
use crate::scene::{reconstruct_mesh, DepthImage, Hit, IndexedMesh, Raycast, TriangleMesh};
use crate::upr::{UprMatrix, Viewport};
use crate::Result;

/// Reconstructed surface in the world frame. Pixels with invalid depth
/// contribute no triangles, so holes stay holes.
#[derive(Debug)]
pub struct WorldGeometry {
    mesh: IndexedMesh,
}

impl WorldGeometry {
    pub const SURFACE_ID: u32 = u32::MAX;

    pub fn from_mesh(mesh: TriangleMesh) -> Self {
        WorldGeometry {
            mesh: IndexedMesh::new(mesh, Self::SURFACE_ID),
        }
    }

    /// Triangulates a depth image and lifts it into the world frame.
    pub fn from_depth(
        depth: &DepthImage,
        device: &PinholeDevice,
        device_to_world: &RigidTransform,
        discontinuity: f64,
    ) -> Result<Self> {
        let local = reconstruct_mesh(depth, device, discontinuity)?;
        Ok(Self::from_mesh(local.transformed(device_to_world)))
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh.mesh
    }

    pub fn triangle_count(&self) -> usize {
        self.mesh.mesh.faces.len()
    }
}

impl Raycast for WorldGeometry {
    fn raycast(&self, origin: &Vec3, direction: &Vec3) -> Option<Hit> {
        self.mesh.raycast(origin, direction)
    }
}

/// Texture coordinate (pass-1 raster) that the warp assigns to a world point.
pub fn texture_coordinate(p_world: &Vec3, upr: &UprMatrix, viewport: &Viewport) -> Option<[f64; 2]> {
    if !upr.in_front(p_world) {
        return None;
    }
    upr.project(p_world).map(|xy| viewport.to_raster(xy))
}

/// Builds the projector framebuffer: each projector pixel looks up the
/// pass-1 color of the geometry point it illuminates; misses and points
/// outside the pass-1 image stay black.
pub fn warp_to_projector(
    geometry: &impl Raycast,
    upr: &UprMatrix,
    viewport: &Viewport,
    pass1: &RasterImage,
    proj: &PinholeDevice,
    proj_to_world: &RigidTransform,
    exec: Exec,
) -> Result<RasterImage> {
    let (w, h) = (proj.width, proj.height);
    let mut fb = RasterImage::new(w, h)?;
    let origin = proj_to_world.translation;
    exec.for_each_row(fb.data_mut(), w as usize * 3, |y, row| {
        for x in 0..w as usize {
            let dir = proj_to_world.rotation * proj.ray(x as f64, y as f64);
            let Some(hit) = geometry.raycast(&origin, &dir) else {
                continue;
            };
            let Some([u, v]) = texture_coordinate(&hit.point, upr, viewport) else {
                continue;
            };
            if let Some(c) = pass1.sample_bilinear(u, v) {
                row[x * 3..x * 3 + 3].copy_from_slice(&to_rgb(c));
            }
        }
    });
    Ok(fb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::upr::{upr_matrix, EyePose};
    use crate::warp::content::{render_user_view, CheckerPattern, Content};

    /// Screen plane (rear z = 0) as a large two-triangle mesh.
    fn screen_mesh(to_world: &RigidTransform) -> TriangleMesh {
        let s = 10.0;
        TriangleMesh::new(
            vec![
                Vec3::new(-s, -s, 0.0),
                Vec3::new(s, -s, 0.0),
                Vec3::new(-s, s, 0.0),
                Vec3::new(s, s, 0.0),
            ],
            vec![[0, 1, 2], [1, 3, 2]],
        )
        .unwrap()
        .transformed(to_world)
    }

    #[test]
    fn identity_configuration_reproduces_pass1() {
        let eye = EyePose::new(0.1, -0.05, 1.5).unwrap();
        let rear_to_world = RigidTransform::from_translation(Vec3::new(0.01, -0.12, -0.08));
        let upr = upr_matrix(&eye, &rear_to_world.inverse()).unwrap();
        let vp = Viewport::for_eye(&eye, 320, 180);
        let pass1 = render_user_view(&Content::Checker(CheckerPattern::new(5, 7, 20).unwrap()), &upr, &vp, Exec::Parallel).unwrap();
        let (cam, cam_to_rear) = vp.user_camera(&eye).unwrap();
        let geometry = WorldGeometry::from_mesh(screen_mesh(&rear_to_world));
        let fb = warp_to_projector(&geometry, &upr, &vp, &pass1, &cam, &rear_to_world.compose(&cam_to_rear), Exec::Parallel).unwrap();
        assert!(fb.max_abs_diff(&pass1).unwrap() <= 1);
    }

    #[test]
    fn miss_is_black() {
        let eye = EyePose::default_user();
        let upr = upr_matrix(&eye, &RigidTransform::identity()).unwrap();
        let vp = Viewport::for_eye(&eye, 32, 18);
        let pass1 = RasterImage::filled(32, 18, [255; 3]).unwrap();
        let proj = PinholeDevice::new(50.0, 50.0, 15.5, 8.5, 32, 18).unwrap();
        let empty = WorldGeometry::from_mesh(TriangleMesh::default());
        let fb = warp_to_projector(&empty, &upr, &vp, &pass1, &proj, &RigidTransform::identity(), Exec::Sequential).unwrap();
        assert_eq!(fb, RasterImage::new(32, 18).unwrap());
    }
}
