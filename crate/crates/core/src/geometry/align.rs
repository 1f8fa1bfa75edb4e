use nalgebra::SVD;

use super::{Mat3, RigidTransform, Vec3};
use crate::{Error, Result};

/// Least-squares rigid fit between two corresponding point sets.
#[derive(Debug, Clone, Copy)]
pub struct Alignment {
    /// Maps source points onto target points.
    pub transform: RigidTransform,
    /// Root-mean-square of `‖T·sᵢ − tᵢ‖`, in the points' length unit.
    pub rms: f64,
}

/// Ratio of the second to the first principal spread below which a point
/// set is treated as collinear.
const COLLINEAR_RATIO: f64 = 1e-9;

fn centroid(points: &[Vec3]) -> Vec3 {
    points.iter().fold(Vec3::zeros(), |acc, p| acc + p) / points.len() as f64
}

fn is_collinear(points: &[Vec3], center: &Vec3) -> bool {
    let scatter = points.iter().fold(Mat3::zeros(), |acc, p| {
        let d = p - center;
        acc + d * d.transpose()
    });
    let sv = SVD::new(scatter, false, false).singular_values;
    !(sv[1] > COLLINEAR_RATIO * sv[0]) || sv[0] == 0.0
}

/// Closed-form orthogonal Procrustes fit minimizing `Σ‖R·sᵢ + t − tᵢ‖²`,
/// with the reflection case folded back onto a proper rotation.
pub fn rigid_align(source: &[Vec3], target: &[Vec3]) -> Result<Alignment> {
    if source.len() != target.len() {
        return Err(Error::InvalidArgument(format!(
            "correspondence count mismatch: {} source vs {} target",
            source.len(),
            target.len()
        )));
    }
    if source.len() < 3 {
        return Err(Error::Degenerate(format!(
            "rigid alignment needs at least 3 correspondences, got {}",
            source.len()
        )));
    }
    let sc = centroid(source);
    let tc = centroid(target);
    if is_collinear(source, &sc) || is_collinear(target, &tc) {
        return Err(Error::Degenerate("correspondences are collinear".into()));
    }

    let cross = source
        .iter()
        .zip(target)
        .fold(Mat3::zeros(), |acc, (s, t)| acc + (t - tc) * (s - sc).transpose());
    let svd = SVD::new(cross, true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Degenerate("cross-covariance SVD failed".into())),
    };
    let mut d = Mat3::identity();
    if (u * v_t).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    let rotation = u * d * v_t;
    let translation = tc - rotation * sc;
    let transform = RigidTransform {
        rotation,
        translation,
    };
    let sq: f64 = source
        .iter()
        .zip(target)
        .map(|(s, t)| (transform.apply(s) - t).norm_squared())
        .sum();
    Ok(Alignment {
        transform,
        rms: (sq / source.len() as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{rotation_about_axis, rotation_defect, UnitAxis};

    fn cloud() -> Vec<Vec3> {
        vec![
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(1.0, 0.0, 1.5),
            Vec3::new(0.0, 1.0, 2.0),
            Vec3::new(0.5, 0.5, 0.2),
            Vec3::new(-0.3, 0.8, 1.1),
        ]
    }

    #[test]
    fn identical_sets_give_identity() {
        let a = rigid_align(&cloud(), &cloud()).unwrap();
        assert!((a.transform.rotation - Mat3::identity()).abs().max() < 1e-12);
        assert!(a.transform.translation.norm() < 1e-12);
        assert!(a.rms < 1e-12);
    }

    #[test]
    fn pure_translation() {
        let shift = Vec3::new(1.0, 2.0, 3.0);
        let moved: Vec<_> = cloud().iter().map(|p| p + shift).collect();
        let a = rigid_align(&cloud(), &moved).unwrap();
        assert!((a.transform.translation - shift).norm() < 1e-12);
        assert!((a.transform.rotation - Mat3::identity()).abs().max() < 1e-12);
    }

    #[test]
    fn reflection_is_never_returned() {
        // Mirror image: the best proper rotation is not the reflection.
        let mirrored: Vec<_> = cloud().iter().map(|p| Vec3::new(-p.x, p.y, p.z)).collect();
        let a = rigid_align(&cloud(), &mirrored).unwrap();
        assert!(rotation_defect(&a.transform.rotation) < 1e-12);
        assert!(a.rms > 0.01);
    }

    #[test]
    fn degenerate_inputs() {
        let line: Vec<_> = (0..5).map(|i| Vec3::new(i as f64, 2.0 * i as f64, 0.0)).collect();
        assert!(matches!(rigid_align(&line, &line), Err(Error::Degenerate(_))));
        assert!(matches!(
            rigid_align(&cloud()[..2], &cloud()[..2]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn exact_on_noiseless_rotation() {
        let r = rotation_about_axis(&UnitAxis::normalize(Vec3::new(1.0, -2.0, 0.5)).unwrap(), 2.9);
        let t = Vec3::new(-0.4, 0.1, 3.0);
        let target: Vec<_> = cloud().iter().map(|p| r * p + t).collect();
        let a = rigid_align(&cloud(), &target).unwrap();
        assert!(a.rms < 1e-10);
        assert!((a.transform.rotation - r).abs().max() < 1e-12);
    }
}
