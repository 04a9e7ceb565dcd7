use nalgebra::{Matrix3, Point3, SymmetricEigen, Vector3};

use super::kdtree::SpatialIndex;
use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Neighborhood size used for normal estimation.
pub const DEFAULT_NORMAL_NEIGHBORS: usize = 10;

// second-largest / largest covariance eigenvalue below this means the
// neighborhood is (numerically) collinear
const RANK2_RATIO: f64 = 1e-12;

/// Estimates a unit normal for every point from the covariance of its `k`
/// nearest neighbors (the point itself included).
///
/// Normals are the smallest-eigenvalue eigenvector, oriented so that
/// `n · (viewpoint − p) ≥ 0`. Points whose neighborhood has rank < 2 get a
/// zero normal.
pub fn estimate_normals(cloud: &PointCloud, k: usize, viewpoint: &Point3<f64>) -> Result<PointCloud> {
    if k < 3 {
        return Err(Error::BadParams(format!("normal estimation needs k ≥ 3, got {k}")));
    }
    if cloud.len() < k {
        return Err(Error::TooFewPoints {
            have: cloud.len(),
            need: k,
        });
    }
    let index = SpatialIndex::build(&cloud.points)?;
    let normals = cloud
        .points
        .iter()
        .map(|p| {
            let neighbors = index.knn(p, k);
            let n = neighbors.len() as f64;
            let mean = neighbors
                .iter()
                .fold(Vector3::zeros(), |acc, &(i, _)| acc + cloud.points[i].coords)
                / n;
            let mut cov = Matrix3::zeros();
            for &(i, _) in &neighbors {
                let d = cloud.points[i].coords - mean;
                cov += d * d.transpose();
            }
            plane_normal(&cov, &(viewpoint - p))
        })
        .collect();
    Ok(PointCloud {
        points: cloud.points.clone(),
        normals: Some(normals),
        frame: cloud.frame.clone(),
        stamp: cloud.stamp,
    })
}

fn plane_normal(cov: &Matrix3<f64>, to_view: &Vector3<f64>) -> Vector3<f64> {
    let eig = SymmetricEigen::new(*cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let largest = eig.eigenvalues[order[0]];
    let middle = eig.eigenvalues[order[1]];
    if !(largest > 0.0) || middle <= RANK2_RATIO * largest {
        return Vector3::zeros();
    }
    let mut n: Vector3<f64> = eig.eigenvectors.column(order[2]).into();
    n.normalize_mut();
    if n.dot(to_view) < 0.0 {
        n = -n;
    }
    n
}
