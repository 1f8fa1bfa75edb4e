use serde::{Deserialize, Serialize};

use super::mesh::{MeshBvh, TriangleMesh, RAY_EPSILON};
use super::Raycast;
use crate::geometry::{RigidTransform, Vec3};
use crate::{Error, Result};

/// Surface geometry. Posed shapes are defined in a local frame mapped to the
/// world by `pose`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    /// The local z = 0 plane; its normal is local +z. `extent` is the full
    /// width × height of a centered rectangle, unbounded when absent.
    Plane {
        pose: RigidTransform,
        #[serde(default)]
        extent: Option<[f64; 2]>,
    },
    /// Axis-aligned box centered at the local origin.
    Box { pose: RigidTransform, dimensions: [f64; 3] },
    Sphere { center: Vec3, radius: f64 },
    /// Capped cylinder along local z, spanning `[-height/2, height/2]`.
    Cylinder {
        pose: RigidTransform,
        radius: f64,
        height: f64,
    },
    Mesh(MeshShape),
}

/// Mesh surface; the acceleration structure is rebuilt on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "TriangleMesh", into = "TriangleMesh")]
pub struct MeshShape {
    mesh: TriangleMesh,
    bvh: MeshBvh,
}

impl MeshShape {
    pub fn new(mesh: TriangleMesh) -> Result<Self> {
        mesh.validate()?;
        let bvh = MeshBvh::build(&mesh, 0);
        Ok(MeshShape { mesh, bvh })
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }
}

impl TryFrom<TriangleMesh> for MeshShape {
    type Error = Error;

    fn try_from(mesh: TriangleMesh) -> Result<Self> {
        MeshShape::new(mesh)
    }
}

impl From<MeshShape> for TriangleMesh {
    fn from(m: MeshShape) -> Self {
        m.mesh
    }
}

impl Shape {
    pub fn plane_from_point_normal(point: Vec3, normal: Vec3, extent: Option<[f64; 2]>) -> Result<Shape> {
        let n = normal.try_normalize(1e-12).ok_or_else(|| {
            Error::InvalidArgument("plane normal must be nonzero".into())
        })?;
        let helper = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let ex = helper.cross(&n).normalize();
        let ey = n.cross(&ex);
        let rotation = crate::geometry::Mat3::from_columns(&[ex, ey, n]);
        Ok(Shape::Plane {
            pose: RigidTransform::new(rotation, point)?,
            extent,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{what} must be positive, got {v}")))
            }
        };
        match self {
            Shape::Plane { extent, .. } => {
                if let Some([w, h]) = extent {
                    positive(*w, "plane width")?;
                    positive(*h, "plane height")?;
                }
                Ok(())
            }
            Shape::Box { dimensions, .. } => dimensions
                .iter()
                .try_for_each(|&d| positive(d, "box dimension")),
            Shape::Sphere { radius, .. } => positive(*radius, "sphere radius"),
            Shape::Cylinder { radius, height, .. } => {
                positive(*radius, "cylinder radius")?;
                positive(*height, "cylinder height")
            }
            Shape::Mesh(m) => m.mesh.validate(),
        }
    }

    /// Nearest `(t, unit normal)` with `t > 1e-6`.
    pub fn intersect(&self, origin: &Vec3, dir: &Vec3) -> Option<(f64, Vec3)> {
        match self {
            Shape::Plane { pose, extent } => {
                let n = pose.rotation.column(2).into_owned();
                let denom = dir.dot(&n);
                if denom.abs() < 1e-12 {
                    return None;
                }
                let t = (pose.translation - origin).dot(&n) / denom;
                if !(t > RAY_EPSILON) {
                    return None;
                }
                if let Some([w, h]) = extent {
                    let local = pose.rotation.transpose() * (origin + dir * t - pose.translation);
                    if local.x.abs() > w / 2.0 || local.y.abs() > h / 2.0 {
                        return None;
                    }
                }
                Some((t, n))
            }
            Shape::Box { pose, dimensions } => {
                let o = pose.rotation.transpose() * (origin - pose.translation);
                let d = pose.rotation.transpose() * dir;
                let (t, local_n) = intersect_box(&o, &d, dimensions)?;
                Some((t, pose.rotation * local_n))
            }
            Shape::Sphere { center, radius } => {
                let oc = origin - center;
                let b = oc.dot(dir);
                let c = oc.norm_squared() - radius * radius;
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let s = disc.sqrt();
                let t = [-b - s, -b + s].into_iter().find(|&t| t > RAY_EPSILON)?;
                Some((t, (origin + dir * t - center) / *radius))
            }
            Shape::Cylinder { pose, radius, height } => {
                let o = pose.rotation.transpose() * (origin - pose.translation);
                let d = pose.rotation.transpose() * dir;
                let (t, local_n) = intersect_cylinder(&o, &d, *radius, *height)?;
                Some((t, pose.rotation * local_n))
            }
            Shape::Mesh(m) => m.bvh.raycast(origin, dir).map(|h| (h.t, h.normal)),
        }
    }
}

fn intersect_box(o: &Vec3, d: &Vec3, dims: &[f64; 3]) -> Option<(f64, Vec3)> {
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    let mut near_axis = (0usize, 0.0);
    let mut far_axis = (0usize, 0.0);
    for i in 0..3 {
        let half = dims[i] / 2.0;
        if d[i].abs() < 1e-300 {
            if o[i].abs() > half {
                return None;
            }
            continue;
        }
        let t1 = (-half - o[i]) / d[i];
        let t2 = (half - o[i]) / d[i];
        // Entering through the face whose outward normal opposes the ray.
        let (tn, tf, sn) = if t1 < t2 { (t1, t2, -1.0) } else { (t2, t1, 1.0) };
        if tn > t_near {
            t_near = tn;
            near_axis = (i, sn);
        }
        if tf < t_far {
            t_far = tf;
            far_axis = (i, -sn);
        }
    }
    if t_near > t_far {
        return None;
    }
    let (t, (axis, sign)) = if t_near > RAY_EPSILON {
        (t_near, near_axis)
    } else if t_far > RAY_EPSILON {
        (t_far, far_axis)
    } else {
        return None;
    };
    let mut n = Vec3::zeros();
    n[axis] = sign;
    Some((t, n))
}

fn intersect_cylinder(o: &Vec3, d: &Vec3, r: f64, h: f64) -> Option<(f64, Vec3)> {
    let half = h / 2.0;
    let mut best: Option<(f64, Vec3)> = None;
    let mut consider = |t: f64, n: Vec3| {
        if t > RAY_EPSILON && best.is_none_or(|(bt, _)| t < bt) {
            best = Some((t, n));
        }
    };
    let a = d.x * d.x + d.y * d.y;
    if a > 1e-300 {
        let b = o.x * d.x + o.y * d.y;
        let c = o.x * o.x + o.y * o.y - r * r;
        let disc = b * b - a * c;
        if disc >= 0.0 {
            let s = disc.sqrt();
            for t in [(-b - s) / a, (-b + s) / a] {
                let p = o + d * t;
                if p.z.abs() <= half {
                    consider(t, Vec3::new(p.x / r, p.y / r, 0.0));
                }
            }
        }
    }
    if d.z.abs() > 1e-300 {
        for (z, nz) in [(-half, -1.0), (half, 1.0)] {
            let t = (z - o.z) / d.z;
            let p = o + d * t;
            if p.x * p.x + p.y * p.y <= r * r {
                consider(t, Vec3::new(0.0, 0.0, nz));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::UnitAxis;

    #[test]
    fn box_faces() {
        let shape = Shape::Box {
            pose: RigidTransform::from_translation(Vec3::new(0.0, 0.0, 3.0)),
            dimensions: [1.0, 1.0, 1.0],
        };
        let (t, n) = shape.intersect(&Vec3::zeros(), &Vec3::z()).unwrap();
        assert!((t - 2.5).abs() < 1e-12);
        assert_eq!(n, Vec3::new(0.0, 0.0, -1.0));
        // From inside, the exit face is reported.
        let (t, n) = shape.intersect(&Vec3::new(0.0, 0.0, 3.0), &Vec3::x()).unwrap();
        assert!((t - 0.5).abs() < 1e-12);
        assert_eq!(n, Vec3::x());
        assert!(shape.intersect(&Vec3::new(2.0, 0.0, 0.0), &Vec3::z()).is_none());
    }

    #[test]
    fn rotated_box_matches_analytic_face() {
        let pose = RigidTransform::from_axis_angle(&UnitAxis::y(), 0.3, Vec3::new(0.0, 0.0, 4.0));
        let shape = Shape::Box { pose, dimensions: [1.0, 2.0, 1.0] };
        let (t, n) = shape.intersect(&Vec3::zeros(), &Vec3::z()).unwrap();
        // Face z = −0.5 in the local frame; the ray meets it where
        // (p − c)·n = 0.5·(-1) along the rotated −z normal.
        let face_n = pose.rotation * Vec3::new(0.0, 0.0, -1.0);
        let expected = (pose.translation + face_n * 0.5).dot(&face_n) / Vec3::z().dot(&face_n);
        assert!((t - expected).abs() < 1e-12);
        assert!((n - face_n).norm() < 1e-12);
    }

    #[test]
    fn cylinder_side_and_cap() {
        let shape = Shape::Cylinder {
            pose: RigidTransform::from_axis_angle(&UnitAxis::x(), std::f64::consts::FRAC_PI_2, Vec3::new(0.0, 0.0, 3.0)),
            radius: 0.5,
            height: 1.0,
        };
        // Axis now along world −y; an axial ray in +z hits the curved side.
        let (t, n) = shape.intersect(&Vec3::zeros(), &Vec3::z()).unwrap();
        assert!((t - 2.5).abs() < 1e-12);
        assert!((n - Vec3::new(0.0, 0.0, -1.0)).norm() < 1e-12);
        // Straight up into the cap.
        let (t, _) = shape.intersect(&Vec3::new(0.0, 2.0, 3.0), &Vec3::new(0.0, -1.0, 0.0)).unwrap();
        assert!((t - 1.5).abs() < 1e-12);
    }

    #[test]
    fn bounded_plane_extent() {
        let shape = Shape::plane_from_point_normal(Vec3::new(0.0, 0.0, 2.0), -Vec3::z(), Some([1.0, 1.0])).unwrap();
        assert!(shape.intersect(&Vec3::zeros(), &Vec3::z()).is_some());
        assert!(shape
            .intersect(&Vec3::zeros(), &Vec3::new(0.3, 0.0, 1.0).normalize())
            .is_none());
    }

    #[test]
    fn invalid_dimensions() {
        assert!(Shape::Sphere { center: Vec3::zeros(), radius: 0.0 }.validate().is_err());
        assert!(Shape::Box { pose: RigidTransform::identity(), dimensions: [1.0, -1.0, 1.0] }
            .validate()
            .is_err());
    }
}
