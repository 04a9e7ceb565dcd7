use nalgebra::{Point3, Vector3};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Default voxel edge length (meters).
pub const DEFAULT_LEAF: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoxelParams {
    leaf: f64,
}

impl VoxelParams {
    pub fn new(leaf: f64) -> Result<Self> {
        if !(leaf > 0.0 && leaf.is_finite()) {
            return Err(Error::BadParams(format!("voxel leaf must be > 0, got {leaf}")));
        }
        Ok(Self { leaf })
    }

    pub fn leaf(&self) -> f64 {
        self.leaf
    }

    /// Length of a voxel's space diagonal.
    pub fn diagonal(&self) -> f64 {
        self.leaf * 3f64.sqrt()
    }

    pub(crate) fn key(&self, p: &Point3<f64>) -> [i64; 3] {
        [
            (p.x / self.leaf).floor() as i64,
            (p.y / self.leaf).floor() as i64,
            (p.z / self.leaf).floor() as i64,
        ]
    }
}

impl Default for VoxelParams {
    fn default() -> Self {
        Self { leaf: DEFAULT_LEAF }
    }
}

/// Replaces the points of every occupied voxel by their centroid.
///
/// Output is ordered by voxel key. Normals, when present, are averaged over
/// the valid normals in the voxel and renormalized.
pub fn voxel_filter(cloud: &PointCloud, params: &VoxelParams) -> PointCloud {
    let mut keyed: Vec<([i64; 3], usize)> = cloud
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| (params.key(p), i))
        .collect();
    // stable sort keeps input order inside a voxel, so sums are reproducible
    keyed.sort_by_key(|&(k, _)| k);

    let mut points = Vec::new();
    let mut normals = cloud.normals.as_ref().map(|_| Vec::new());
    let mut start = 0;
    while start < keyed.len() {
        let key = keyed[start].0;
        let mut end = start;
        let mut sum = Vector3::zeros();
        let mut nsum = Vector3::zeros();
        while end < keyed.len() && keyed[end].0 == key {
            let i = keyed[end].1;
            sum += cloud.points[i].coords;
            if cloud.normal_valid(i) {
                nsum += cloud.normals.as_ref().unwrap()[i];
            }
            end += 1;
        }
        points.push(Point3::from(sum / (end - start) as f64));
        if let Some(out) = normals.as_mut() {
            let len = nsum.norm();
            out.push(if len > 1e-12 { nsum / len } else { Vector3::zeros() });
        }
        start = end;
    }

    PointCloud {
        points,
        normals,
        frame: cloud.frame.clone(),
        stamp: cloud.stamp,
    }
}
