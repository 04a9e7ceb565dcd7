//! Prior-based overlap extraction between consecutive clouds and merging of
//! high-rate frames into one registration cloud.

use crate::cloud::{apply, PointCloud};
use crate::error::{Error, Result};
use crate::geometry::RigidTransform;
use crate::preprocessing::{voxel_filter, SpatialIndex, VoxelParams};

/// Largest number of frames [`merge_frames`] accepts.
pub const MAX_MERGE_WINDOW: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapParams {
    /// Nearest-neighbor radius for overlap membership (meters).
    pub radius: f64,
    /// Minimum fraction of the current cloud that must overlap.
    pub min_ratio: f64,
    /// Minimum size of both overlap subsets.
    pub min_points: usize,
}

impl Default for OverlapParams {
    fn default() -> Self {
        Self {
            radius: 0.02,
            min_ratio: 0.30,
            min_points: 100,
        }
    }
}

impl OverlapParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) {
            return Err(Error::BadParams(format!("overlap radius must be > 0, got {}", self.radius)));
        }
        if !(0.0..=1.0).contains(&self.min_ratio) {
            return Err(Error::BadParams(format!(
                "overlap min_ratio must lie in [0, 1], got {}",
                self.min_ratio
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct OverlapResult {
    /// Overlapping part of the previous cloud, in its own frame.
    pub prev_subset: PointCloud,
    /// Overlapping part of the current cloud, mapped into the previous frame
    /// by the inverse prior.
    pub curr_subset_aligned: PointCloud,
    pub prev_indices: Vec<usize>,
    pub curr_indices: Vec<usize>,
    /// `|curr subset| / |curr|`.
    pub ratio: f64,
}

/// Overlap of `curr` with `prev`, given the prior that maps frame `k−1`
/// coordinates into frame `k`.
pub fn compute_overlap(
    prev: &PointCloud,
    curr: &PointCloud,
    prior: &RigidTransform,
    params: &OverlapParams,
) -> Result<OverlapResult> {
    let index = SpatialIndex::build(&prev.points)?;
    compute_overlap_indexed(prev, &index, curr, prior, params)
}

/// [`compute_overlap`] with a prebuilt index over `prev`.
pub fn compute_overlap_indexed(
    prev: &PointCloud,
    prev_index: &SpatialIndex,
    curr: &PointCloud,
    prior: &RigidTransform,
    params: &OverlapParams,
) -> Result<OverlapResult> {
    if prev.is_empty() || curr.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let aligned = apply(&prior.inverse(), curr).in_frame(prev.frame.clone());
    let curr_indices: Vec<usize> = aligned
        .points
        .iter()
        .enumerate()
        .filter(|(_, p)| prev_index.nearest(p, params.radius).is_some())
        .map(|(i, _)| i)
        .collect();
    let curr_subset_aligned = aligned.select(&curr_indices);

    let prev_indices: Vec<usize> = if curr_indices.is_empty() {
        Vec::new()
    } else {
        let curr_index = SpatialIndex::build(&curr_subset_aligned.points)?;
        prev.points
            .iter()
            .enumerate()
            .filter(|(_, p)| curr_index.nearest(p, params.radius).is_some())
            .map(|(i, _)| i)
            .collect()
    };

    Ok(OverlapResult {
        prev_subset: prev.select(&prev_indices),
        ratio: curr_indices.len() as f64 / curr.len() as f64,
        curr_subset_aligned,
        prev_indices,
        curr_indices,
    })
}

/// Inclusive ratio threshold plus minimum subset sizes.
pub fn sufficient_overlap(r: &OverlapResult, params: &OverlapParams) -> bool {
    r.ratio >= params.min_ratio
        && r.prev_subset.len() >= params.min_points
        && r.curr_subset_aligned.len() >= params.min_points
}

/// Maps every frame into the first frame's coordinates with its transform,
/// concatenates and re-voxelizes. The result carries the first frame's
/// stamp and frame tag.
pub fn merge_frames(frames: &[(PointCloud, RigidTransform)], voxel: &VoxelParams) -> Result<PointCloud> {
    let Some((first, _)) = frames.first() else {
        return Err(Error::EmptyInput);
    };
    if frames.len() > MAX_MERGE_WINDOW {
        return Err(Error::BadParams(format!(
            "at most {MAX_MERGE_WINDOW} frames can be merged, got {}",
            frames.len()
        )));
    }
    let mut merged = PointCloud {
        frame: first.frame.clone(),
        stamp: first.stamp,
        normals: first.normals.as_ref().map(|_| Vec::new()),
        points: Vec::new(),
    };
    for (cloud, to_first) in frames {
        merged.extend(&apply(to_first, cloud));
    }
    Ok(voxel_filter(&merged, voxel))
}
