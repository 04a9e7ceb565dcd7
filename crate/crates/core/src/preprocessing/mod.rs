//! Noise reduction, spatial indexing and normal estimation.

mod kdtree;
mod normals;
mod voxel;

pub use kdtree::{build_index, SpatialIndex};
pub use normals::{estimate_normals, DEFAULT_NORMAL_NEIGHBORS};
pub use voxel::{voxel_filter, VoxelParams, DEFAULT_LEAF};
