//! Built-in test rooms. The world frame is the front camera at home
//! (+z forward, +y down); every room has a wall three meters ahead.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::geometry::{RigidTransform, UnitAxis, Vec3};
use crate::scene::{Scene, Shape, Surface, TriangleMesh};
use crate::Result;

pub const WALL_DISTANCE_M: f64 = 3.0;

const WALL: [f64; 3] = [0.8, 0.8, 0.8];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StandardScene {
    /// Flat wall only.
    Wall,
    /// The wall turned 45° about the vertical.
    Oblique,
    /// A cube turned 30° in front of the wall.
    Box,
    /// Upright cylinder in front of the wall.
    Cylinder,
    SphereCluster,
    /// Draped, wavy sheet in front of the wall.
    Cloth,
    /// Narrow panel seen at a shallow angle by the depth camera.
    Grazing,
    /// Several frontal boxes at different depths.
    FrontalPanels,
}

impl StandardScene {
    pub const ALL: [StandardScene; 8] = [
        StandardScene::Wall,
        StandardScene::Oblique,
        StandardScene::Box,
        StandardScene::Cylinder,
        StandardScene::SphereCluster,
        StandardScene::Cloth,
        StandardScene::Grazing,
        StandardScene::FrontalPanels,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            StandardScene::Wall => "wall",
            StandardScene::Oblique => "oblique",
            StandardScene::Box => "box",
            StandardScene::Cylinder => "cylinder",
            StandardScene::SphereCluster => "sphere_cluster",
            StandardScene::Cloth => "cloth",
            StandardScene::Grazing => "grazing",
            StandardScene::FrontalPanels => "frontal_panels",
        }
    }

    pub fn build(&self) -> Result<Scene> {
        let mut surfaces = Vec::new();
        if *self != StandardScene::Oblique {
            surfaces.push(frontal_wall()?);
        }
        match self {
            StandardScene::Wall => {}
            StandardScene::Oblique => {
                let (s, c) = 45f64.to_radians().sin_cos();
                let n = Vec3::new(s, 0.0, -c);
                let shape = Shape::plane_from_point_normal(Vec3::new(0.0, 0.0, WALL_DISTANCE_M), n, Some([8.0, 8.0]))?;
                surfaces.push(Surface::new(1, WALL, shape));
            }
            StandardScene::Box => {
                let pose = RigidTransform::from_axis_angle(&UnitAxis::y(), 30f64.to_radians(), Vec3::new(0.05, 0.0, 2.3));
                surfaces.push(Surface::new(2, [0.9, 0.6, 0.4], Shape::Box { pose, dimensions: [0.5, 0.5, 0.5] }));
            }
            StandardScene::Cylinder => {
                let pose = RigidTransform::from_axis_angle(&UnitAxis::x(), FRAC_PI_2, Vec3::new(-0.05, 0.0, 2.3));
                surfaces.push(Surface::new(2, [0.5, 0.7, 0.9], Shape::Cylinder { pose, radius: 0.22, height: 0.8 }));
            }
            StandardScene::SphereCluster => {
                let spheres = [
                    (Vec3::new(-0.3, 0.05, 2.4), 0.2),
                    (Vec3::new(0.2, -0.1, 2.2), 0.18),
                    (Vec3::new(0.05, 0.25, 2.6), 0.15),
                ];
                for (i, (center, radius)) in spheres.into_iter().enumerate() {
                    surfaces.push(Surface::new(2 + i as u32, [0.7, 0.9, 0.6], Shape::Sphere { center, radius }));
                }
            }
            StandardScene::Cloth => {
                surfaces.push(Surface::new(2, [0.9, 0.9, 0.7], Shape::Mesh(cloth_mesh().try_into()?)));
            }
            StandardScene::Grazing => {
                let yaw = 70f64.to_radians();
                let n = Vec3::new(yaw.sin(), 0.0, -yaw.cos());
                let shape = Shape::plane_from_point_normal(Vec3::new(0.15, 0.0, 2.2), n, Some([1.0, 0.6]))?;
                surfaces.push(Surface::new(2, [0.9, 0.8, 0.8], shape));
            }
            StandardScene::FrontalPanels => {
                let boxes = [
                    (Vec3::new(-0.35, -0.1, 2.2), [0.3, 0.4, 0.2]),
                    (Vec3::new(0.3, 0.1, 2.5), [0.35, 0.3, 0.2]),
                    (Vec3::new(0.0, -0.25, 1.9), [0.25, 0.2, 0.15]),
                ];
                for (i, (center, dimensions)) in boxes.into_iter().enumerate() {
                    let pose = RigidTransform::from_translation(center);
                    surfaces.push(Surface::new(2 + i as u32, [0.8, 0.7, 0.9], Shape::Box { pose, dimensions }));
                }
            }
        }
        Scene::new(surfaces, vec![])
    }
}

fn frontal_wall() -> Result<Surface> {
    // Local +z (the normal) faces the rig.
    let pose = RigidTransform::from_axis_angle(&UnitAxis::x(), PI, Vec3::new(0.0, 0.0, WALL_DISTANCE_M));
    Ok(Surface::new(1, WALL, Shape::Plane { pose, extent: Some([8.0, 6.0]) }))
}

/// 1.2 m × 0.8 m sheet at 2.4 m with a gentle two-way ripple.
fn cloth_mesh() -> TriangleMesh {
    let (nx, ny) = (48usize, 32usize);
    let (w, h, z0, amp) = (1.2, 0.8, 2.4, 0.06);
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let x = -w / 2.0 + w * i as f64 / nx as f64;
            let y = -h / 2.0 + h * j as f64 / ny as f64;
            let z = z0 + amp * (2.0 * PI * x / 0.6).sin() * (2.0 * PI * y / 0.5).cos();
            vertices.push(Vec3::new(x, y, z));
        }
    }
    let mut faces = Vec::with_capacity(nx * ny * 2);
    let idx = |i: usize, j: usize| (j * (nx + 1) + i) as u32;
    for j in 0..ny {
        for i in 0..nx {
            faces.push([idx(i, j), idx(i + 1, j), idx(i, j + 1)]);
            faces.push([idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    TriangleMesh { vertices, faces }
}
