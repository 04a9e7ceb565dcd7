use nalgebra::{Matrix6, Point3, Vector3, Vector6};

use super::correspondence::CorrespondenceSet;
use crate::eigen::eigen_sym6;
use crate::error::{Error, Result};
use crate::geometry::TwistDelta;

/// Smallest admissible eigenvalue of the normal equations, relative to the
/// largest.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Mean squared point-to-plane residual.
pub fn point_to_plane_mse(set: &CorrespondenceSet) -> f64 {
    if set.is_empty() {
        return 0.0;
    }
    set.pairs.iter().map(|c| c.plane_residual().powi(2)).sum::<f64>() / set.len() as f64
}

/// Least-squares minimizer `[r; t]` of
/// `Σ ((p − q)·n + r·(p × n) + t·n)²`.
///
/// The system is assembled in coordinates centered on the source centroid
/// and scaled by the mean radius, then mapped back, which keeps the normal
/// equations well conditioned far from the origin.
pub fn solve_point_to_plane(set: &CorrespondenceSet) -> Result<TwistDelta> {
    if set.len() < 6 {
        return Err(Error::TooFewSamples {
            have: set.len(),
            need: 6,
        });
    }
    let n = set.len() as f64;
    let center = set.pairs.iter().fold(Vector3::zeros(), |a, c| a + c.source_point.coords) / n;
    let center = Point3::from(center);
    let scale = set.pairs.iter().map(|c| (c.source_point - center).norm()).sum::<f64>() / n;
    let scale = if scale > 0.0 { scale } else { 1.0 };

    let mut a = Matrix6::zeros();
    let mut b = Vector6::zeros();
    for c in &set.pairs {
        let p = (c.source_point - center) / scale;
        let nrm = c.target_normal;
        let torque = p.cross(&nrm);
        let f = Vector6::new(torque.x, torque.y, torque.z, nrm.x, nrm.y, nrm.z);
        a += f * f.transpose();
        b -= f * c.plane_residual();
    }
    let a = (a + a.transpose()) * 0.5;
    let eig = eigen_sym6(&a)?;
    let (max, min) = (eig.values[0], eig.values[5]);
    if !(max > 0.0) || !(min > RANK_TOLERANCE * max) {
        return Err(Error::RankDeficient(if max > 0.0 { min / max } else { 0.0 }));
    }
    let coeffs = eig.vectors.transpose() * b;
    let x = eig.vectors * Vector6::from_fn(|i, _| coeffs[i] / eig.values[i]);

    // undo the normalization: r' = s·r, t' = t + r × c
    let rot = Vector3::new(x[0], x[1], x[2]) / scale;
    let trans = Vector3::new(x[3], x[4], x[5]) - rot.cross(&center.coords);
    TwistDelta::new(rot, trans)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RigidTransform;
    use crate::solver::Correspondence;

    /// Corner faces x=0, y=0, z=0 offset away from the origin.
    fn corner(m: usize, offset: Vector3<f64>) -> Vec<(Point3<f64>, Vector3<f64>)> {
        let mut out = Vec::new();
        for i in 0..m {
            for j in 0..m {
                let (u, v) = ((i as f64 + 0.5) / m as f64, (j as f64 + 0.5) / m as f64);
                out.push((Point3::new(0.0, u, v) + offset, Vector3::x()));
                out.push((Point3::new(u, 0.0, v) + offset, Vector3::y()));
                out.push((Point3::new(u, v, 0.0) + offset, Vector3::z()));
            }
        }
        out
    }

    /// Exact correspondences: `q` on the target, `p = motion⁻¹(q)` so that
    /// applying `motion` to the source restores alignment.
    fn displaced(motion: &RigidTransform, target: &[(Point3<f64>, Vector3<f64>)]) -> CorrespondenceSet {
        let inv = motion.inverse();
        CorrespondenceSet {
            pairs: target
                .iter()
                .enumerate()
                .map(|(i, (q, n))| {
                    let p = inv.transform_point(q);
                    Correspondence {
                        source: i,
                        target: i,
                        source_point: p,
                        target_point: *q,
                        target_normal: *n,
                        dist2: (p - q).norm_squared(),
                    }
                })
                .collect(),
        }
    }

    fn energy(set: &CorrespondenceSet, x: &TwistDelta) -> f64 {
        set.pairs
            .iter()
            .map(|c| {
                let p = c.source_point;
                (c.plane_residual() + x.rot().dot(&p.coords.cross(&c.target_normal)) + x.trans().dot(&c.target_normal))
                    .powi(2)
            })
            .sum()
    }

    #[test]
    fn zero_displacement() {
        let set = displaced(&RigidTransform::identity(), &corner(10, Vector3::new(1.0, 2.0, 0.5)));
        let x = solve_point_to_plane(&set).unwrap();
        assert!(x.norm() < 1e-15);
        assert_eq!(point_to_plane_mse(&set), 0.0);
    }

    #[test]
    fn recovers_translation() {
        let t = Vector3::new(0.002, -0.001, 0.003);
        let set = displaced(&RigidTransform::from_translation(t), &corner(10, Vector3::new(0.3, -0.2, 1.5)));
        let x = solve_point_to_plane(&set).unwrap();
        assert!((x.trans() - t).norm() < 1e-6);
        assert!(x.rot().norm() < 1e-6);
    }

    #[test]
    fn recovers_small_rotation() {
        let motion = RigidTransform::from_axis_angle(&Vector3::z(), 0.01);
        let set = displaced(&motion, &corner(10, Vector3::zeros()));
        let x = solve_point_to_plane(&set).unwrap();
        assert!((x.rot() - Vector3::new(0.0, 0.0, 0.01)).norm() < 1e-5, "{}", x.rot());
        assert!(energy(&set, &x) <= energy(&set, &TwistDelta::zero()));
    }

    #[test]
    fn plane_only_is_rank_deficient() {
        let plane: Vec<_> = corner(6, Vector3::zeros())
            .into_iter()
            .filter(|(_, n)| *n == Vector3::z())
            .collect();
        let set = displaced(&RigidTransform::identity(), &plane);
        assert!(matches!(solve_point_to_plane(&set), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn too_few_pairs() {
        let set = displaced(&RigidTransform::identity(), &corner(1, Vector3::zeros()));
        assert!(matches!(solve_point_to_plane(&set), Err(Error::TooFewSamples { .. })));
    }
}
