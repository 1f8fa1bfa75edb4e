//! Linear algebra primitives shared by every other module.
//!
//! Conventions: right-handed frames; camera and projector frames have +z
//! along the optical axis, +x to the right and +y down, so pixel `v` grows
//! downward. Pixel centers sit at integer coordinates, so a `W`-pixel row
//! spans `[-0.5, W - 0.5]`. Angles are radians everywhere except in
//! human-edited files, which use degrees.

mod align;
mod pinhole;
mod rotation;
mod transform;

pub use align::{rigid_align, Alignment};
pub use pinhole::{PinholeDevice, Projection};
pub use rotation::{rotation_about_axis, UnitAxis};
pub(crate) use rotation::rotation_axis_derivative;
pub use transform::{PoseSpec, RigidTransform};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type HomPoint4 = nalgebra::Vector4<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
pub type Mat34 = nalgebra::Matrix3x4<f64>;
pub type Mat4 = nalgebra::Matrix4<f64>;

/// Skew-symmetric cross-product matrix, `skew(a) * b == a.cross(&b)`.
pub fn skew(a: &Vec3) -> Mat3 {
    Mat3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// Largest deviation of `m` from a proper rotation: `max |RᵀR - I|` and `|det - 1|`.
pub fn rotation_defect(m: &Mat3) -> f64 {
    let orth = (m.transpose() * m - Mat3::identity()).abs().max();
    orth.max((m.determinant() - 1.0).abs())
}

/// Geodesic angle between two rotations, in radians.
pub fn rotation_angle_between(a: &Mat3, b: &Mat3) -> f64 {
    let r = a.transpose() * b;
    // atan2 of the skew and symmetric parts stays accurate for tiny angles.
    let s = Vec3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]).norm() / 2.0;
    s.atan2((r.trace() - 1.0) / 2.0)
}
