use serde::{Deserialize, Serialize};

use super::{Mat3, RigidTransform, Vec3};
use crate::{Error, Result};

/// Intrinsics and resolution of a camera, or of a projector treated as an
/// inverse camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDevice")]
pub struct PinholeDevice {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    #[serde(default)]
    pub skew: f64,
    pub width: u32,
    pub height: u32,
}

#[derive(Deserialize)]
struct RawDevice {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    #[serde(default)]
    skew: f64,
    width: u32,
    height: u32,
}

impl TryFrom<RawDevice> for PinholeDevice {
    type Error = Error;

    fn try_from(r: RawDevice) -> Result<Self> {
        PinholeDevice::with_skew(r.fx, r.fy, r.cx, r.cy, r.skew, r.width, r.height)
    }
}

/// Pixel position and depth of a projected point. `depth` is the
/// homogeneous scale: the point's z in the device frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

impl PinholeDevice {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        Self::with_skew(fx, fy, cx, cy, 0.0, width, height)
    }

    pub fn with_skew(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        skew: f64,
        width: u32,
        height: u32,
    ) -> Result<Self> {
        let d = PinholeDevice {
            fx,
            fy,
            cx,
            cy,
            skew,
            width,
            height,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.fx, self.fy, self.cx, self.cy, self.skew]
            .iter()
            .all(|v| v.is_finite());
        if !finite || !(self.fx > 0.0) || !(self.fy > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "focal lengths must be positive and finite (fx {}, fy {})",
                self.fx, self.fy
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidArgument("device resolution must be nonzero".into()));
        }
        if !(0.0..self.width as f64).contains(&self.cx)
            || !(0.0..self.height as f64).contains(&self.cy)
        {
            return Err(Error::InvalidArgument(format!(
                "principal point ({}, {}) outside {}x{} image",
                self.cx, self.cy, self.width, self.height
            )));
        }
        Ok(())
    }

    /// Upper-triangular intrinsic matrix `A`.
    pub fn matrix(&self) -> Mat3 {
        Mat3::new(self.fx, self.skew, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    /// Projects a point already expressed in the device frame.
    pub fn project_local(&self, p: &Vec3) -> Result<Projection> {
        if !(p.z > 0.0) {
            return Err(Error::BehindDevice { depth: p.z });
        }
        let x = p.x / p.z;
        let y = p.y / p.z;
        Ok(Projection {
            u: self.fx * x + self.skew * y + self.cx,
            v: self.fy * y + self.cy,
            depth: p.z,
        })
    }

    /// Projects `p` given in a source frame; `source_to_device` maps it into
    /// the device frame first.
    pub fn project(&self, source_to_device: &RigidTransform, p: &Vec3) -> Result<Projection> {
        self.project_local(&source_to_device.apply(p))
    }

    /// Device-frame point at pixel `(u, v)` with z equal to `depth`.
    pub fn backproject(&self, u: f64, v: f64, depth: f64) -> Result<Vec3> {
        if !(depth > 0.0) || !depth.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "backprojection depth must be positive, got {depth}"
            )));
        }
        Ok(self.normalized(u, v) * depth)
    }

    /// Direction through pixel `(u, v)` scaled to z = 1.
    pub fn normalized(&self, u: f64, v: f64) -> Vec3 {
        let y = (v - self.cy) / self.fy;
        let x = (u - self.cx - self.skew * y) / self.fx;
        Vec3::new(x, y, 1.0)
    }

    /// Unit ray direction through pixel `(u, v)` in the device frame.
    pub fn ray(&self, u: f64, v: f64) -> Vec3 {
        self.normalized(u, v).normalize()
    }

    /// True when `(u, v)` falls on the sensor, pixel footprints included.
    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= -0.5 && v >= -0.5 && u < self.width as f64 - 0.5 && v < self.height as f64 - 0.5
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn device() -> PinholeDevice {
        PinholeDevice::new(1000.0, 1000.0, 500.0, 500.0, 1000, 1000).unwrap()
    }

    #[test]
    fn principal_ray_projects_to_center() {
        let p = device()
            .project(&RigidTransform::identity(), &Vec3::new(0.0, 0.0, 2.0))
            .unwrap();
        assert_eq!((p.u, p.v, p.depth), (500.0, 500.0, 2.0));
    }

    #[test]
    fn off_axis_projection() {
        let p = device()
            .project(&RigidTransform::identity(), &Vec3::new(0.1, 0.0, 1.0))
            .unwrap();
        assert!((p.u - 600.0).abs() < 1e-12);
        assert_eq!(p.v, 500.0);
        assert_eq!(p.depth, 1.0);
    }

    #[test]
    fn behind_device_is_an_error() {
        let err = device()
            .project(&RigidTransform::identity(), &Vec3::new(0.0, 0.0, -1.0))
            .unwrap_err();
        assert!(matches!(err, Error::BehindDevice { .. }));
        assert!(device().project_local(&Vec3::zeros()).is_err());
    }

    #[test]
    fn backprojection_examples() {
        let d = device();
        assert_eq!(d.backproject(500.0, 500.0, 3.0).unwrap(), Vec3::new(0.0, 0.0, 3.0));
        assert_eq!(d.backproject(1500.0, 500.0, 1.0).unwrap(), Vec3::new(1.0, 0.0, 1.0));
        assert!(matches!(d.backproject(1.0, 1.0, 0.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn invalid_intrinsics_rejected() {
        assert!(PinholeDevice::new(-1.0, 1.0, 1.0, 1.0, 4, 4).is_err());
        assert!(PinholeDevice::new(1.0, 1.0, 4.0, 1.0, 4, 4).is_err());
        assert!(serde_json::from_str::<PinholeDevice>(
            r#"{"fx":0,"fy":1,"cx":1,"cy":1,"width":4,"height":4}"#
        )
        .is_err());
    }
}
