//! User-perspective projection.
//!
//! The virtual screen is the `z = 0` plane of the rear-camera frame. A world
//! point is drawn where the line from the tracked eye through it crosses
//! that plane; `A_upr = A_user · T_world→rear` gives those plane coordinates
//! (meters) after dehomogenization. A [`Viewport`] maps them to raster
//! pixels of the pass-1 image.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geometry::{HomPoint4, Mat3, Mat34, PinholeDevice, RigidTransform, Vec3};
use crate::{Error, Result};

/// Eye position in the rear-camera frame, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct EyePose {
    pub e_x: f64,
    pub e_y: f64,
    pub e_z: f64,
}

impl EyePose {
    pub fn new(e_x: f64, e_y: f64, e_z: f64) -> Result<Self> {
        if !(e_x.is_finite() && e_y.is_finite() && e_z.is_finite()) {
            return Err(Error::InvalidArgument("eye position must be finite".into()));
        }
        if e_z == 0.0 {
            return Err(Error::EyeOnScreenPlane);
        }
        Ok(EyePose { e_x, e_y, e_z })
    }

    /// A user standing 1.5 m in front of the rear camera, on its optical axis.
    pub fn default_user() -> Self {
        EyePose { e_x: 0.0, e_y: 0.0, e_z: 1.5 }
    }

    pub fn position(&self) -> Vec3 {
        Vec3::new(self.e_x, self.e_y, self.e_z)
    }
}

impl TryFrom<[f64; 3]> for EyePose {
    type Error = Error;

    fn try_from(v: [f64; 3]) -> Result<Self> {
        EyePose::new(v[0], v[1], v[2])
    }
}

impl From<EyePose> for [f64; 3] {
    fn from(e: EyePose) -> Self {
        [e.e_x, e.e_y, e.e_z]
    }
}

/// `[[−e_z, 0, e_x, 0], [0, −e_z, e_y, 0], [0, 0, 1, −e_z]]`.
pub fn user_projection_matrix(eye: &EyePose) -> Result<Mat34> {
    if eye.e_z == 0.0 {
        return Err(Error::EyeOnScreenPlane);
    }
    let EyePose { e_x, e_y, e_z } = *eye;
    Ok(Mat34::new(
        -e_z, 0.0, e_x, 0.0, //
        0.0, -e_z, e_y, 0.0, //
        0.0, 0.0, 1.0, -e_z,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UprMatrix {
    pub eye: EyePose,
    pub a_user: Mat34,
    pub world_to_rear: RigidTransform,
    pub a_upr: Mat34,
}

pub fn upr_matrix(eye: &EyePose, world_to_rear: &RigidTransform) -> Result<UprMatrix> {
    let a_user = user_projection_matrix(eye)?;
    Ok(UprMatrix {
        eye: *eye,
        a_user,
        world_to_rear: *world_to_rear,
        a_upr: a_user * world_to_rear.to_mat4(),
    })
}

impl UprMatrix {
    pub fn homogeneous(&self, p_world: &Vec3) -> Vector3<f64> {
        self.a_upr * HomPoint4::new(p_world.x, p_world.y, p_world.z, 1.0)
    }

    /// Screen-plane coordinates (meters) of a world point, or `None` on the
    /// plane through the eye parallel to the screen.
    pub fn project(&self, p_world: &Vec3) -> Option<[f64; 2]> {
        dehomogenize(&self.homogeneous(p_world))
    }

    /// Whether the point lies on the viewing side of the eye (the side the
    /// screen plane is on).
    pub fn in_front(&self, p_world: &Vec3) -> bool {
        let w = self.homogeneous(p_world)[2];
        w * self.eye.e_z < 0.0
    }

    pub fn rear_to_world(&self) -> RigidTransform {
        self.world_to_rear.inverse()
    }

    pub fn eye_world(&self) -> Vec3 {
        self.rear_to_world().apply(&self.eye.position())
    }

    /// World position of a screen-plane point.
    pub fn screen_to_world(&self, xy: [f64; 2]) -> Vec3 {
        self.rear_to_world().apply(&Vec3::new(xy[0], xy[1], 0.0))
    }
}

pub fn dehomogenize(h: &Vector3<f64>) -> Option<[f64; 2]> {
    if h[2] == 0.0 || !h[2].is_finite() {
        return None;
    }
    Some([h[0] / h[2], h[1] / h[2]])
}

/// Window of the virtual screen (centered on the rear-camera axis) and its
/// raster resolution. With `mirror_x` the raster x axis runs along rear −x,
/// which is the user's right when the user faces the screen from the +z side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Viewport {
    pub width_m: f64,
    pub height_m: f64,
    pub width_px: u32,
    pub height_px: u32,
    #[serde(default)]
    pub mirror_x: bool,
}

pub const DEFAULT_SCREEN_WIDTH_M: f64 = 2.0;
pub const DEFAULT_SCREEN_HEIGHT_M: f64 = 1.125;

impl Viewport {
    pub fn new(width_m: f64, height_m: f64, width_px: u32, height_px: u32, mirror_x: bool) -> Result<Self> {
        let v = Viewport { width_m, height_m, width_px, height_px, mirror_x };
        v.validate()?;
        Ok(v)
    }

    /// Default 2 m × 1.125 m window, mirrored when the eye is on the +z side.
    pub fn for_eye(eye: &EyePose, width_px: u32, height_px: u32) -> Self {
        Viewport {
            width_m: DEFAULT_SCREEN_WIDTH_M,
            height_m: DEFAULT_SCREEN_HEIGHT_M,
            width_px,
            height_px,
            mirror_x: eye.e_z > 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width_m > 0.0 && self.height_m > 0.0) || self.width_px == 0 || self.height_px == 0 {
            return Err(Error::InvalidArgument(format!("invalid viewport {self:?}")));
        }
        Ok(())
    }

    fn sx(&self) -> f64 {
        let s = self.width_px as f64 / self.width_m;
        if self.mirror_x {
            -s
        } else {
            s
        }
    }

    fn sy(&self) -> f64 {
        self.height_px as f64 / self.height_m
    }

    /// Screen meters to raster pixel coordinates (pixel centers at integers).
    pub fn to_raster(&self, xy: [f64; 2]) -> [f64; 2] {
        [
            self.width_px as f64 / 2.0 - 0.5 + self.sx() * xy[0],
            self.height_px as f64 / 2.0 - 0.5 + self.sy() * xy[1],
        ]
    }

    pub fn from_raster(&self, uv: [f64; 2]) -> [f64; 2] {
        [
            (uv[0] - self.width_px as f64 / 2.0 + 0.5) / self.sx(),
            (uv[1] - self.height_px as f64 / 2.0 + 0.5) / self.sy(),
        ]
    }

    /// Pinhole camera at the eye whose image coincides with this raster:
    /// every screen-plane point lands on its own raster position. Returns the
    /// device and its rear-frame pose (camera to rear).
    pub fn user_camera(&self, eye: &EyePose) -> Result<(PinholeDevice, RigidTransform)> {
        // The camera looks toward the screen plane: along rear −z when the
        // eye is on the +z side, along +z otherwise.
        let look = if eye.e_z > 0.0 { -1.0 } else { 1.0 };
        if self.mirror_x != (eye.e_z > 0.0) {
            return Err(Error::InvalidArgument(
                "viewport mirroring must match the side of the screen the eye is on".into(),
            ));
        }
        // Camera x must run along the raster x axis.
        let xdir = if self.mirror_x { -1.0 } else { 1.0 };
        let rotation = Mat3::from_diagonal(&Vec3::new(xdir, 1.0, look));
        let (sx, sy) = (self.sx(), self.sy());
        let dist = eye.e_z.abs();
        // Screen point (X, Y, 0) has camera coordinates
        // (xdir·(X − e_x), Y − e_y, |e_z|); matching the raster map fixes
        // fx = |sx|·|e_z| and the principal point.
        let device = PinholeDevice {
            fx: sx.abs() * dist,
            fy: sy * dist,
            cx: self.width_px as f64 / 2.0 - 0.5 + sx * eye.e_x,
            cy: self.height_px as f64 / 2.0 - 0.5 + sy * eye.e_y,
            skew: 0.0,
            width: self.width_px,
            height: self.height_px,
        };
        Ok((device, RigidTransform { rotation, translation: eye.position() }))
    }
}
