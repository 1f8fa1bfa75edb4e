//! The virtual room: raycastable surfaces, checkerboard targets, synthetic
//! depth sensing and depth-to-mesh reconstruction.

mod checkerboard;
mod depth;
mod mesh;
mod shapes;

pub use checkerboard::CheckerboardTarget;
pub use depth::{reconstruct_mesh, sense_depth, DepthImage, DepthNoiseModel, DEFAULT_DISCONTINUITY_M};
pub use mesh::{IndexedMesh, MeshBvh, TriangleMesh};
pub use shapes::{MeshShape, Shape};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;
use crate::{Error, Result};


/// Nearest intersection of a ray with some geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub point: Vec3,
    /// Unit surface normal at the hit.
    pub normal: Vec3,
    pub surface_id: u32,
    /// Ray parameter; equals the distance for unit directions.
    pub t: f64,
}

/// Anything a ray can be cast against. `direction` must be unit length and
/// only hits with `t > 1e-6` count.
pub trait Raycast: Sync {
    fn raycast(&self, origin: &Vec3, direction: &Vec3) -> Option<Hit>;
}

/// One object of the room.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Surface {
    pub id: u32,
    /// Linear reflectance per RGB channel, each in `[0, 1]`.
    #[serde(default = "default_albedo")]
    pub albedo: [f64; 3],
    #[serde(flatten)]
    pub shape: Shape,
}

fn default_albedo() -> [f64; 3] {
    [0.8, 0.8, 0.8]
}

impl Surface {
    pub fn new(id: u32, albedo: [f64; 3], shape: Shape) -> Self {
        Surface { id, albedo, shape }
    }
}

/// Immutable, validated collection of surfaces and calibration targets.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(try_from = "SceneFile", into = "SceneFile")]
pub struct Scene {
    surfaces: Vec<Surface>,
    checkerboards: Vec<CheckerboardTarget>,
}

pub const SCENE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    version: u32,
    #[serde(default)]
    surfaces: Vec<Surface>,
    #[serde(default)]
    checkerboards: Vec<CheckerboardTarget>,
}

impl TryFrom<SceneFile> for Scene {
    type Error = Error;

    fn try_from(f: SceneFile) -> Result<Self> {
        if f.version != SCENE_SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "unsupported scene version {} (expected {SCENE_SCHEMA_VERSION})",
                f.version
            )));
        }
        Scene::new(f.surfaces, f.checkerboards)
    }
}

impl From<Scene> for SceneFile {
    fn from(s: Scene) -> Self {
        SceneFile {
            version: SCENE_SCHEMA_VERSION,
            surfaces: s.surfaces,
            checkerboards: s.checkerboards,
        }
    }
}

impl Scene {
    pub fn new(surfaces: Vec<Surface>, checkerboards: Vec<CheckerboardTarget>) -> Result<Self> {
        for s in &surfaces {
            s.shape
                .validate()
                .map_err(|e| Error::Schema(format!("surface {}: {e}", s.id)))?;
            if s.albedo.iter().any(|a| !(0.0..=1.0).contains(a)) {
                return Err(Error::Schema(format!("surface {}: albedo outside [0, 1]", s.id)));
            }
        }
        for b in &checkerboards {
            b.validate()?;
        }
        Ok(Scene {
            surfaces,
            checkerboards,
        })
    }

    pub fn surfaces(&self) -> &[Surface] {
        &self.surfaces
    }

    pub fn checkerboards(&self) -> &[CheckerboardTarget] {
        &self.checkerboards
    }

    pub fn surface(&self, id: u32) -> Option<&Surface> {
        self.surfaces.iter().find(|s| s.id == id)
    }

    pub fn with_surface(mut self, surface: Surface) -> Result<Self> {
        surface
            .shape
            .validate()
            .map_err(|e| Error::Schema(format!("surface {}: {e}", surface.id)))?;
        self.surfaces.push(surface);
        Ok(self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }
}

impl Raycast for Scene {
    fn raycast(&self, origin: &Vec3, direction: &Vec3) -> Option<Hit> {
        self.surfaces
            .iter()
            .filter_map(|s| {
                s.shape.intersect(origin, direction).map(|(t, normal)| Hit {
                    point: origin + direction * t,
                    normal,
                    surface_id: s.id,
                    t,
                })
            })
            .min_by(|a, b| a.t.total_cmp(&b.t))
    }
}

/// Nearest hit of a ray with `scene`.
pub fn raycast(scene: &impl Raycast, origin: &Vec3, direction: &Vec3) -> Option<Hit> {
    scene.raycast(origin, direction)
}
