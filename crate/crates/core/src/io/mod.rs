//! On-disk formats: PLY clouds, pose files, the dataset layout, run
//! configuration files and run reports.

mod config;
mod dataset;
mod ply;
mod poses;
mod report;

pub use config::{load_sim_config, RunConfig, StrategyName};
pub use dataset::{
    cloud_file_name, nearest, write_dataset, Dataset, DatasetFrame, CLOUD_DIR, EXTRINSICS_FILE, GROUND_TRUTH_FILE,
    ODOMETRY_FILE,
};
pub use ply::{read_ply, write_ply};
pub use poses::{format_poses, parse_poses, read_poses, write_poses};
pub use report::{run_dataset, run_sequence, RunReport, Summary, Timing, FRAMES_FILE, MAP_FILE, SUMMARY_FILE, TRAJECTORY_FILE};
