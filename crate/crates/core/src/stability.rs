//! Geometric stability of a point-to-plane alignment.
//!
//! Each sampled point with normal `n` contributes `f = [p′ × n; n]` to the
//! 6×6 constraint matrix `C = Σ f fᵀ` (row order: rotation, translation).
//! Points are centered on the sample centroid and divided by the mean
//! distance to it, so that rotational and translational constraints are
//! measured in the same units and the condition number `λ1/λ6` does not
//! depend on the coordinate origin or scene scale.

use nalgebra::{Matrix6, Point3, Vector6};

use crate::eigen::{eigen_sym6, Eigen6};
use crate::error::{Error, Result};
use crate::sampling::SampleSet;

/// Default condition-number threshold above which ICP is skipped.
pub const DEFAULT_C_THRES: f64 = 15.0;
/// Eigenvalues at or below `EIG_FLOOR · λ1` count as zero.
pub const EIG_FLOOR: f64 = 1e-10;
/// Minimum sample size for a full-rank constraint matrix.
pub const MIN_SAMPLES: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMatrix {
    pub matrix: Matrix6<f64>,
    pub centroid: Point3<f64>,
    /// Mean point distance from the centroid used as length unit.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// λ1 ≥ … ≥ λ6 ≥ 0.
    pub eigenvalues: Vector6<f64>,
    /// Unit eigenvectors as columns, matching `eigenvalues`.
    pub eigenvectors: Matrix6<f64>,
    /// `λ1/λ6`, or `+∞` when λ6 is numerically zero.
    pub condition_number: f64,
    pub stable: bool,
    /// Eigenvectors whose eigenvalue fails `λ1/λj ≤ c_thres`.
    pub sliding_directions: Vec<Vector6<f64>>,
}

pub fn build_constraint_matrix(s: &SampleSet) -> Result<ConstraintMatrix> {
    if s.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            have: s.len(),
            need: MIN_SAMPLES,
        });
    }
    let n = s.len() as f64;
    let centroid = Point3::from(s.points.iter().fold(nalgebra::Vector3::zeros(), |a, p| a + p.coords) / n);
    let mean_radius = s.points.iter().map(|p| (p - centroid).norm()).sum::<f64>() / n;
    let scale = if mean_radius > 0.0 { mean_radius } else { 1.0 };

    let mut matrix = Matrix6::zeros();
    for (p, normal) in s.points.iter().zip(&s.normals) {
        let p = (p - centroid) / scale;
        let torque = p.cross(normal);
        let f = Vector6::new(torque.x, torque.y, torque.z, normal.x, normal.y, normal.z);
        matrix += f * f.transpose();
    }
    // exact symmetry
    let matrix = (matrix + matrix.transpose()) * 0.5;
    Ok(ConstraintMatrix {
        matrix,
        centroid,
        scale,
    })
}

/// Descending eigendecomposition of a constraint matrix.
pub fn eigen_constraints(c: &ConstraintMatrix) -> Result<Eigen6> {
    eigen_sym6(&c.matrix)
}

pub fn assess_stability(s: &SampleSet, c_thres: f64) -> Result<StabilityReport> {
    if !(c_thres >= 1.0) {
        return Err(Error::BadParams(format!("c_thres must be ≥ 1, got {c_thres}")));
    }
    let c = build_constraint_matrix(s)?;
    Ok(report_from(&eigen_constraints(&c)?, c_thres))
}

fn report_from(eig: &Eigen6, c_thres: f64) -> StabilityReport {
    let eigenvalues = eig.values.map(|v| v.max(0.0));
    let l1 = eigenvalues[0];
    let floor = EIG_FLOOR * l1;
    let l6 = eigenvalues[5];
    let condition_number = if l1 > 0.0 && l6 > floor { l1 / l6 } else { f64::INFINITY };
    let sliding_directions = (0..6)
        .filter(|&j| {
            let lj = eigenvalues[j];
            lj <= floor || l1 / lj > c_thres
        })
        .map(|j| eig.vector(j))
        .collect();
    StabilityReport {
        eigenvalues,
        eigenvectors: eig.vectors,
        condition_number,
        stable: condition_number <= c_thres,
        sliding_directions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Vector3, Matrix3};
    use proptest::prelude::*;

    fn plane_sample() -> SampleSet {
        let mut pts = Vec::new();
        for i in 0..20 {
            for j in 0..20 {
                pts.push(Point3::new(i as f64 * 0.05, j as f64 * 0.05, 0.0));
            }
        }
        let normals = vec![Vector3::z(); pts.len()];
        SampleSet::from_parts(pts, normals)
    }

    /// Antipodally symmetric near-uniform sphere sample with radial normals.
    fn sphere_sample(n: usize) -> SampleSet {
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let mut pts = Vec::new();
        for i in 0..n {
            let z = 1.0 - (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let th = golden * i as f64;
            let p = Vector3::new(r * th.cos(), r * th.sin(), z);
            pts.push(p);
            pts.push(-p);
        }
        let normals = pts.clone();
        SampleSet::from_parts(pts.into_iter().map(Point3::from).collect(), normals)
    }

    fn corner_sample(m: usize) -> SampleSet {
        let mut pts = Vec::new();
        let mut normals = Vec::new();
        for i in 0..m {
            for j in 0..m {
                let (u, v) = ((i as f64 + 0.5) / m as f64, (j as f64 + 0.5) / m as f64);
                pts.push(Point3::new(0.0, u, v));
                normals.push(Vector3::x());
                pts.push(Point3::new(u, 0.0, v));
                normals.push(Vector3::y());
                pts.push(Point3::new(u, v, 0.0));
                normals.push(Vector3::z());
            }
        }
        SampleSet::from_parts(pts, normals)
    }

    /// Six square faces at distance `d` from the origin, half-extent `a`,
    /// `m × m` grid each, normals pointing inward.
    fn box_sample(d: f64, a: f64, m: usize) -> SampleSet {
        let mut pts = Vec::new();
        let mut normals = Vec::new();
        let grid: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64 * 2.0 * a - a).collect();
        for sign in [1.0, -1.0] {
            for axis in 0..3 {
                let (o1, o2) = ((axis + 1) % 3, (axis + 2) % 3);
                for &u in &grid {
                    for &v in &grid {
                        let mut p = Vector3::zeros();
                        p[axis] = sign * d;
                        p[o1.min(o2)] = u;
                        p[o1.max(o2)] = v;
                        let mut n = Vector3::zeros();
                        n[axis] = -sign;
                        pts.push(Point3::from(p));
                        normals.push(n);
                    }
                }
            }
        }
        SampleSet::from_parts(pts, normals)
    }

    fn transformed(s: &SampleSet, scale: f64, shift: Vector3<f64>) -> SampleSet {
        SampleSet::from_parts(
            s.points.iter().map(|p| Point3::from(p.coords * scale + shift)).collect(),
            s.normals.clone(),
        )
    }

    #[test]
    fn too_few_samples() {
        let s = SampleSet::from_parts(vec![Point3::origin(); 5], vec![Vector3::z(); 5]);
        assert!(matches!(build_constraint_matrix(&s), Err(Error::TooFewSamples { have: 5, need: 6 })));
        assert!(assess_stability(&plane_sample(), 0.5).is_err());
    }

    #[test]
    fn plane_is_degenerate() {
        let c = build_constraint_matrix(&plane_sample()).unwrap();
        let trans = c.matrix.fixed_view::<3, 3>(3, 3).into_owned();
        assert_eq!(trans.rank(1e-12), 1);
        let r = assess_stability(&plane_sample(), DEFAULT_C_THRES).unwrap();
        assert!(!r.stable);
        assert_eq!(r.condition_number, f64::INFINITY);
        assert!(r.eigenvalues[5] <= 1e-9 * r.eigenvalues[0]);
        // in-plane translations and rotation about the normal slide
        let basis = [
            Vector6::new(0.0, 0.0, 0.0, 1.0, 0.0, 0.0),
            Vector6::new(0.0, 0.0, 0.0, 0.0, 1.0, 0.0),
            Vector6::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0),
        ];
        assert_eq!(r.sliding_directions.len(), 3);
        for b in basis {
            let proj: f64 = r.sliding_directions.iter().map(|v| v.dot(&b).powi(2)).sum();
            assert!((proj - 1.0).abs() < 1e-9, "{proj}");
        }
    }

    #[test]
    fn sphere_has_three_free_rotations() {
        let c = build_constraint_matrix(&sphere_sample(500)).unwrap();
        assert!(c.matrix.fixed_view::<3, 3>(0, 0).amax() < 1e-9);
        let e = eigen_constraints(&c).unwrap();
        let zeros = e.values.iter().filter(|&&v| v.abs() <= 1e-9 * e.values[0]).count();
        assert_eq!(zeros, 3);
    }

    #[test]
    fn corner_is_stable() {
        let r = assess_stability(&corner_sample(17), DEFAULT_C_THRES).unwrap();
        assert!(r.stable, "c = {}", r.condition_number);
        assert!(r.eigenvalues.iter().all(|&v| v > 0.01 * r.eigenvalues[0]));
        assert!(r.sliding_directions.is_empty());
    }

    #[test]
    fn corner_condition_matches_reference() {
        // reference value from an independent dense eigen-decomposition
        let r = assess_stability(&corner_sample(17), DEFAULT_C_THRES).unwrap();
        assert!((r.condition_number - 3.820338927506755).abs() < 1e-9, "{}", r.condition_number);
    }

    #[test]
    fn boxed_origin_is_nearly_isotropic() {
        let r = assess_stability(&box_sample(1.0, 3.0, 20), DEFAULT_C_THRES).unwrap();
        assert!((r.condition_number - 1.0741779081726752).abs() < 1e-9, "{}", r.condition_number);
        assert!((r.condition_number - 1.0).abs() <= 0.2);
        // a closed unit cube is rotation-weak relative to its translations
        let cube = assess_stability(&box_sample(1.0, 1.0, 20), DEFAULT_C_THRES).unwrap();
        assert!((cube.condition_number - 2.464684905945056).abs() < 1e-9);
    }

    #[test]
    fn trace_and_order() {
        let s = corner_sample(10);
        let c = build_constraint_matrix(&s).unwrap();
        let r = assess_stability(&s, DEFAULT_C_THRES).unwrap();
        assert!((r.eigenvalues.sum() - c.matrix.trace()).abs() < 1e-8 * c.matrix.trace());
        for j in 0..5 {
            assert!(r.eigenvalues[j] >= r.eigenvalues[j + 1]);
        }
        assert!(r.condition_number >= 1.0);
    }

    #[test]
    fn constraint_matrix_matches_explicit_stacking() {
        // second accumulation route: build F (6 × ℓ) and multiply out
        let s = corner_sample(6);
        let c = build_constraint_matrix(&s).unwrap();
        let mut f = nalgebra::DMatrix::<f64>::zeros(6, s.len());
        for (k, (p, n)) in s.points.iter().zip(&s.normals).enumerate() {
            let p = (p - c.centroid) / c.scale;
            let col = Matrix3::from_columns(&[p.cross(n), *n, Vector3::zeros()]);
            for r in 0..3 {
                f[(r, k)] = col[(r, 0)];
                f[(r + 3, k)] = col[(r, 1)];
            }
        }
        let ff = &f * f.transpose();
        for i in 0..6 {
            for j in 0..6 {
                assert!((ff[(i, j)] - c.matrix[(i, j)]).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn gate_invariant_to_translation_and_scale(v in prop::array::uniform3(-100.0f64..100.0),
                                                   scale in 0.1f64..10.0) {
            for base in [corner_sample(8), plane_sample()] {
                let r0 = assess_stability(&base, DEFAULT_C_THRES).unwrap();
                let r1 = assess_stability(&transformed(&base, scale, Vector3::from(v)), DEFAULT_C_THRES).unwrap();
                prop_assert_eq!(r0.stable, r1.stable);
                if r0.condition_number.is_finite() {
                    prop_assert!((r0.condition_number - r1.condition_number).abs() < 1e-6 * r0.condition_number);
                }
            }
        }
    }
}
