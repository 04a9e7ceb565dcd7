//! Prior-guided point-to-plane ICP for depth-sensor odometry refinement.
//!
//! A frame is registered against its predecessor only when the two share
//! enough surface and the shared surface constrains all six degrees of
//! freedom; otherwise the visual-inertial prior is kept. The [`sim`] module
//! renders synthetic depth sequences with known ground truth.

// `!(x > 0.0)` is used deliberately so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cloud;
pub mod eigen;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod overlap;
pub mod pipeline;
pub mod preprocessing;
pub mod sampling;
pub mod sim;
pub mod solver;
pub mod stability;

pub use cloud::PointCloud;
pub use error::{Error, Result};
pub use geometry::{Pose, RigidTransform, TwistDelta};
pub use pipeline::{FrameLog, PipelineConfig, PipelineState, Provenance};
