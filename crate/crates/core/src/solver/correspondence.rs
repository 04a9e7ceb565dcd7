use nalgebra::{Point3, Vector3};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::preprocessing::SpatialIndex;

/// A target cloud with normals and its spatial index.
#[derive(Debug, Clone)]
pub struct RegistrationTarget {
    cloud: PointCloud,
    index: SpatialIndex,
}

impl RegistrationTarget {
    pub fn new(cloud: PointCloud) -> Result<Self> {
        if !cloud.has_normals() {
            return Err(Error::MissingNormals);
        }
        let index = SpatialIndex::build(&cloud.points)?;
        Ok(Self { cloud, index })
    }

    pub fn cloud(&self) -> &PointCloud {
        &self.cloud
    }

    pub fn index(&self) -> &SpatialIndex {
        &self.index
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    /// Position in the source point list that was matched.
    pub source: usize,
    pub target: usize,
    pub source_point: Point3<f64>,
    pub target_point: Point3<f64>,
    pub target_normal: Vector3<f64>,
    pub dist2: f64,
}

impl Correspondence {
    /// Signed distance of the source point to the target tangent plane.
    pub fn plane_residual(&self) -> f64 {
        (self.source_point - self.target_point).dot(&self.target_normal)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorrespondenceSet {
    pub pairs: Vec<Correspondence>,
}

impl CorrespondenceSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Pairs every source point with its nearest target point within
/// `d_corr_max`, carrying the target's normal. Unmatched points, and matches
/// onto targets without a valid normal, are dropped.
pub fn find_correspondences(
    source: &[Point3<f64>],
    target: &RegistrationTarget,
    d_corr_max: f64,
) -> Result<CorrespondenceSet> {
    let normals = target.cloud.normals.as_ref().expect("checked at construction");
    let pairs: Vec<Correspondence> = source
        .iter()
        .enumerate()
        .filter_map(|(i, p)| {
            let (j, d) = target.index.nearest(p, d_corr_max)?;
            target.cloud.normal_valid(j).then(|| Correspondence {
                source: i,
                target: j,
                source_point: *p,
                target_point: target.cloud.points[j],
                target_normal: normals[j],
                dist2: d * d,
            })
        })
        .collect();
    if pairs.is_empty() {
        return Err(Error::NoCorrespondences);
    }
    Ok(CorrespondenceSet { pairs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(step: f64, n: usize, z: f64) -> Vec<Point3<f64>> {
        let mut pts = Vec::new();
        for i in 0..n {
            for j in 0..n {
                pts.push(Point3::new(i as f64 * step, j as f64 * step, z));
            }
        }
        pts
    }

    fn target(pts: Vec<Point3<f64>>) -> RegistrationTarget {
        let normals = vec![Vector3::z(); pts.len()];
        RegistrationTarget::new(PointCloud::with_normals(pts, normals)).unwrap()
    }

    #[test]
    fn requires_normals() {
        assert!(matches!(
            RegistrationTarget::new(PointCloud::new(vec![Point3::origin()])),
            Err(Error::MissingNormals)
        ));
    }

    #[test]
    fn aligned_clouds_match_themselves() {
        let pts = grid(0.01, 20, 0.0);
        let set = find_correspondences(&pts, &target(pts.clone()), 0.01).unwrap();
        assert_eq!(set.len(), pts.len());
        for c in &set.pairs {
            assert_eq!(c.source, c.target);
            assert_eq!(c.dist2, 0.0);
        }
    }

    #[test]
    fn beyond_max_distance_is_an_error() {
        let t = target(grid(0.1, 5, 0.0));
        let src = grid(0.1, 5, 0.03);
        assert!(matches!(find_correspondences(&src, &t, 0.01), Err(Error::NoCorrespondences)));
    }

    #[test]
    fn in_plane_shift_matches_nearest_grid_node() {
        let pts = grid(0.02, 20, 0.0);
        let shifted: Vec<Point3<f64>> = pts.iter().map(|p| p + Vector3::new(0.005, 0.0, 0.0)).collect();
        let set = find_correspondences(&shifted, &target(pts), 0.01).unwrap();
        assert_eq!(set.len(), shifted.len());
        for c in &set.pairs {
            // analytic nearest node is the unshifted one, 5 mm away
            assert!((c.dist2.sqrt() - 0.005).abs() < 1e-12);
            assert_eq!(c.source, c.target);
            assert_eq!(c.target_normal, Vector3::z());
            assert_eq!(c.plane_residual(), 0.0);
        }
    }
}
