use std::path::{Path, PathBuf};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::eval::DEFAULT_MAX_DT;
use crate::geometry::{check_monotonic, Pose, RigidTransform};
use crate::sim::{Extrinsics, SimSequence};

use super::ply::{read_ply, write_ply};
use super::poses::{read_poses, write_poses};

pub const CLOUD_DIR: &str = "clouds";
pub const ODOMETRY_FILE: &str = "odometry.txt";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.txt";
pub const EXTRINSICS_FILE: &str = "extrinsics.toml";

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFrame {
    pub stamp: f64,
    pub path: PathBuf,
    /// Odometry-body pose associated with this frame.
    pub odometry: Pose,
}

/// A recorded or simulated sequence on disk:
///
/// ```text
/// clouds/<stamp>.ply    one depth frame per file, sensor coordinates
/// odometry.txt          odometry-body poses, one line per pose
/// ground_truth.txt      optional depth-sensor poses
/// extrinsics.toml       optional body → sensor mount
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub root: PathBuf,
    /// Sorted by stamp; every frame has an odometry pose within
    /// [`DEFAULT_MAX_DT`].
    pub frames: Vec<DatasetFrame>,
    pub ground_truth: Option<Vec<Pose>>,
    pub extrinsics: Option<Extrinsics>,
}

impl Dataset {
    pub fn open(root: &Path) -> Result<Self> {
        let cloud_dir = root.join(CLOUD_DIR);
        let entries = std::fs::read_dir(&cloud_dir).map_err(|e| Error::io(&cloud_dir, e))?;
        let mut clouds = Vec::new();
        for entry in entries {
            let path = entry.map_err(|e| Error::io(&cloud_dir, e))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("ply") {
                continue;
            }
            let stamp = path
                .file_stem()
                .and_then(|s| s.to_str())
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|s| s.is_finite())
                .ok_or_else(|| Error::format(&path, "cloud file name is not a timestamp"))?;
            clouds.push((stamp, path));
        }
        if clouds.is_empty() {
            return Err(Error::format(&cloud_dir, "no .ply frames"));
        }
        clouds.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = clouds.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::NonMonotonicTimestamp {
                stamp: w[1].0,
                last: w[0].0,
            });
        }

        let odometry = read_poses(&root.join(ODOMETRY_FILE))?;
        check_monotonic(&odometry)?;
        let frames = clouds
            .into_iter()
            .map(|(stamp, path)| {
                let odometry = *nearest(&odometry, stamp, DEFAULT_MAX_DT).ok_or(Error::Unassociable {
                    stamp,
                    max_dt: DEFAULT_MAX_DT,
                })?;
                Ok(DatasetFrame { stamp, path, odometry })
            })
            .collect::<Result<Vec<_>>>()?;

        let gt_path = root.join(GROUND_TRUTH_FILE);
        let ground_truth = gt_path.exists().then(|| read_poses(&gt_path)).transpose()?;
        let ex_path = root.join(EXTRINSICS_FILE);
        let extrinsics = if ex_path.exists() {
            let text = std::fs::read_to_string(&ex_path).map_err(|e| Error::io(&ex_path, e))?;
            let ex: Extrinsics = toml::from_str(&text).map_err(|e| Error::format(&ex_path, e.to_string()))?;
            ex.transform().map_err(|e| Error::format(&ex_path, e.to_string()))?;
            Some(ex)
        } else {
            None
        };
        Ok(Self {
            root: root.to_path_buf(),
            frames,
            ground_truth,
            extrinsics,
        })
    }

    /// Loads frame `i`, stamped.
    pub fn load_cloud(&self, i: usize) -> Result<PointCloud> {
        let f = &self.frames[i];
        Ok(read_ply(&f.path)?.stamped(f.stamp).in_frame("depth"))
    }

    /// Odometry motion from frame `i − 1` to frame `i`, in body coordinates
    /// (identity for the first frame).
    pub fn odometry_motion(&self, i: usize) -> RigidTransform {
        if i == 0 {
            return RigidTransform::identity();
        }
        let (a, b) = (&self.frames[i - 1].odometry, &self.frames[i].odometry);
        crate::geometry::relative_motion(&a.transform, &b.transform)
    }
}

/// Pose whose stamp is closest to `stamp`, if within `max_dt`. `poses` must
/// be sorted by stamp.
pub fn nearest(poses: &[Pose], stamp: f64, max_dt: f64) -> Option<&Pose> {
    let i = poses.partition_point(|p| p.stamp < stamp);
    [i.checked_sub(1), Some(i)]
        .into_iter()
        .flatten()
        .filter_map(|j| poses.get(j))
        .min_by(|a, b| (a.stamp - stamp).abs().total_cmp(&(b.stamp - stamp).abs()))
        .filter(|p| (p.stamp - stamp).abs() <= max_dt)
}

/// File name used for a frame stamped `stamp`.
pub fn cloud_file_name(stamp: f64) -> String {
    format!("{stamp:.6}.ply")
}

/// Writes a simulated sequence in the dataset layout. Frames are stamped by
/// their file names, so stamps are rounded to microseconds throughout.
pub fn write_dataset(root: &Path, seq: &SimSequence) -> Result<()> {
    let cloud_dir = root.join(CLOUD_DIR);
    std::fs::create_dir_all(&cloud_dir).map_err(|e| Error::io(&cloud_dir, e))?;
    let round = |p: &Pose| Pose::new(format!("{:.6}", p.stamp).parse().unwrap(), p.transform);
    for f in &seq.frames {
        write_ply(&cloud_dir.join(cloud_file_name(f.truth.stamp)), &f.cloud)?;
    }
    let odometry: Vec<Pose> = seq.odometry.iter().map(round).collect();
    write_poses(&root.join(ODOMETRY_FILE), &odometry)?;
    let truth: Vec<Pose> = seq.frames.iter().map(|f| round(&f.truth)).collect();
    write_poses(&root.join(GROUND_TRUTH_FILE), &truth)?;
    let ex_path = root.join(EXTRINSICS_FILE);
    let text = toml::to_string(&Extrinsics::from_transform(&seq.extrinsics))
        .map_err(|e| Error::format(&ex_path, e.to_string()))?;
    std::fs::write(&ex_path, text).map_err(|e| Error::io(&ex_path, e))
}
