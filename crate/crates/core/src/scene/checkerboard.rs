use serde::{Deserialize, Serialize};

use crate::geometry::{RigidTransform, Vec3};
use crate::{Error, Result};

/// Planar calibration target. Inner corner `(i, j)` sits at
/// `(j·square_size, i·square_size, 0)` in the board frame and has index
/// `i·cols + j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckerboardTarget {
    /// Board frame to world.
    pub pose: RigidTransform,
    pub rows: usize,
    pub cols: usize,
    pub square_size: f64,
}

impl CheckerboardTarget {
    pub fn new(pose: RigidTransform, rows: usize, cols: usize, square_size: f64) -> Result<Self> {
        let b = CheckerboardTarget {
            pose,
            rows,
            cols,
            square_size,
        };
        b.validate()?;
        Ok(b)
    }

    /// Board whose corner grid is centered on `center`, with the board
    /// plane spanned by the rotation's first two columns.
    pub fn centered(
        center: Vec3,
        rotation: crate::geometry::Mat3,
        rows: usize,
        cols: usize,
        square_size: f64,
    ) -> Result<Self> {
        let half = Vec3::new(
            (cols - 1) as f64 * square_size / 2.0,
            (rows - 1) as f64 * square_size / 2.0,
            0.0,
        );
        let pose = RigidTransform::new(rotation, center - rotation * half)?;
        Self::new(pose, rows, cols, square_size)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows < 2 || self.cols < 2 {
            return Err(Error::InvalidArgument(format!(
                "checkerboard needs at least 2x2 inner corners, got {}x{}",
                self.rows, self.cols
            )));
        }
        if !(self.square_size > 0.0) {
            return Err(Error::InvalidArgument("checkerboard square size must be positive".into()));
        }
        Ok(())
    }

    pub fn corner_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn corner_local(&self, index: usize) -> Vec3 {
        let (i, j) = (index / self.cols, index % self.cols);
        Vec3::new(j as f64 * self.square_size, i as f64 * self.square_size, 0.0)
    }

    /// World positions of all inner corners in index order.
    pub fn corners_world(&self) -> Vec<Vec3> {
        (0..self.corner_count())
            .map(|k| self.pose.apply(&self.corner_local(k)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corner_layout() {
        let b = CheckerboardTarget::new(RigidTransform::from_translation(Vec3::new(1.0, 0.0, 2.0)), 6, 9, 0.04).unwrap();
        let c = b.corners_world();
        assert_eq!(c.len(), 54);
        assert_eq!(c[0], Vec3::new(1.0, 0.0, 2.0));
        assert!((c[10] - Vec3::new(1.04, 0.04, 2.0)).norm() < 1e-15);
        assert!(CheckerboardTarget::new(RigidTransform::identity(), 1, 9, 0.04).is_err());
    }

    #[test]
    fn centered_board() {
        let b = CheckerboardTarget::centered(Vec3::new(0.0, 0.0, 1.5), crate::geometry::Mat3::identity(), 6, 9, 0.04).unwrap();
        let mean = b.corners_world().iter().fold(Vec3::zeros(), |a, p| a + p) / 54.0;
        assert!((mean - Vec3::new(0.0, 0.0, 1.5)).norm() < 1e-12);
    }
}
