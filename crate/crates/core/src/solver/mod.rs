//! Point-to-plane ICP: correspondence search, RANSAC outlier rejection,
//! the linearized least-squares step and the iteration driver.

mod correspondence;
mod icp;
mod point_to_plane;
mod ransac;

pub use correspondence::{find_correspondences, Correspondence, CorrespondenceSet, RegistrationTarget};
pub use icp::{icp_register, icp_register_sample, ConvergedBy, IcpParams, RegistrationResult};
pub use point_to_plane::{point_to_plane_mse, solve_point_to_plane, RANK_TOLERANCE};
pub use ransac::{reject_outliers, Rejection, MAX_REJECTED_FRACTION};
