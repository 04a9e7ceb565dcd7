//! Per-frame registration state machine.
//!
//! Each incoming depth frame is voxel-filtered and given normals. Frames are
//! grouped into windows of `merge_window` frames; the last frame of a window
//! is the reference, and the whole window is merged into its coordinates and
//! registered against the previous reference:
//!
//! overlap check → stability gate → ICP, falling back to the odometry prior
//! whenever a step declines. Every frame still gets a pose (window members
//! that are not references advance by their prior).

use std::time::Instant;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::cloud::{apply, PointCloud};
use crate::error::{Error, Result};
use crate::geometry::{Pose, RigidTransform};
use crate::overlap::{compute_overlap_indexed, merge_frames, sufficient_overlap, OverlapParams, MAX_MERGE_WINDOW};
use crate::preprocessing::{
    estimate_normals, voxel_filter, VoxelParams, DEFAULT_NORMAL_NEIGHBORS,
};
use crate::sampling::{sample, SamplingStrategy, DEFAULT_SAMPLE_SIZE};
use crate::solver::{icp_register_sample, IcpParams, RegistrationTarget};
use crate::stability::{assess_stability, StabilityReport, DEFAULT_C_THRES};

/// Where a frame's relative motion came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Provenance {
    Icp,
    /// The prior, with no registration attempted (first frame, or a frame
    /// inside a merge window).
    Prior,
    PriorLowOverlap,
    PriorUnstable,
    PriorIcpFailed,
}

impl Provenance {
    pub const ALL: [Provenance; 5] = [
        Provenance::Icp,
        Provenance::Prior,
        Provenance::PriorLowOverlap,
        Provenance::PriorUnstable,
        Provenance::PriorIcpFailed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Provenance::Icp => "ICP",
            Provenance::Prior => "PRIOR",
            Provenance::PriorLowOverlap => "PRIOR_LOW_OVERLAP",
            Provenance::PriorUnstable => "PRIOR_UNSTABLE",
            Provenance::PriorIcpFailed => "PRIOR_ICP_FAILED",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Maps odometry-body coordinates into depth-sensor coordinates.
    pub extrinsics: RigidTransform,
    pub voxel: VoxelParams,
    pub normal_neighbors: usize,
    pub overlap: OverlapParams,
    pub sampling: SamplingStrategy,
    pub sample_size: usize,
    pub c_thres: f64,
    pub icp: IcpParams,
    pub merge_window: usize,
    /// When false, ICP runs even on geometrically unstable samples.
    pub gate_enabled: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            extrinsics: RigidTransform::identity(),
            voxel: VoxelParams::default(),
            normal_neighbors: DEFAULT_NORMAL_NEIGHBORS,
            overlap: OverlapParams::default(),
            sampling: SamplingStrategy::default(),
            sample_size: DEFAULT_SAMPLE_SIZE,
            c_thres: DEFAULT_C_THRES,
            icp: IcpParams::default(),
            merge_window: 1,
            gate_enabled: true,
        }
    }
}

impl PipelineConfig {
    /// Defaults widened for odometry priors that are off by centimeters and
    /// degrees: overlap radius 4 cm, correspondence and RANSAC thresholds
    /// 3 cm, and a fitness tolerance small enough that ICP iterates until the
    /// update itself vanishes.
    pub fn loose_prior() -> Self {
        let mut cfg = Self::default();
        cfg.overlap.radius = 0.04;
        cfg.icp.d_corr_max = 0.03;
        cfg.icp.t_ransac_reject = 0.03;
        cfg.icp.e_euclidean_fitness = 1e-9;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_thres >= 1.0) {
            return Err(Error::BadParams(format!("c_thres must be ≥ 1, got {}", self.c_thres)));
        }
        if !(1..=MAX_MERGE_WINDOW).contains(&self.merge_window) {
            return Err(Error::BadParams(format!(
                "merge_window must lie in [1, {MAX_MERGE_WINDOW}], got {}",
                self.merge_window
            )));
        }
        if self.normal_neighbors < 3 {
            return Err(Error::BadParams("normal_neighbors must be ≥ 3".into()));
        }
        if self.sample_size == 0 {
            return Err(Error::BadParams("sample_size must be ≥ 1".into()));
        }
        self.overlap.validate()?;
        self.icp.validate()
    }
}

/// Stability figures kept in the frame log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilitySummary {
    pub eigenvalues: [f64; 6],
    /// `None` encodes an infinite condition number.
    pub condition_number: Option<f64>,
    pub stable: bool,
}

impl From<&StabilityReport> for StabilitySummary {
    fn from(r: &StabilityReport) -> Self {
        Self {
            eigenvalues: r.eigenvalues.into(),
            condition_number: r.condition_number.is_finite().then_some(r.condition_number),
            stable: r.stable,
        }
    }
}

/// One record per processed frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameLog {
    pub stamp: f64,
    pub overlap_ratio: Option<f64>,
    pub stability: Option<StabilitySummary>,
    pub provenance: Provenance,
    pub fitness: Option<f64>,
    pub iterations: Option<usize>,
    pub correspondences: Option<usize>,
    /// Wall-clock seconds spent in `process_frame`.
    pub elapsed: f64,
}

/// Depth-frame relative motion from an odometry-frame one, by conjugation
/// with the extrinsics.
pub fn prior_from_vi(vi_rel: &RigidTransform, extrinsics: &RigidTransform) -> RigidTransform {
    extrinsics.compose(vi_rel).compose(&extrinsics.inverse())
}

/// Adds `cloud`, placed at `pose`, to a voxel-deduplicated map.
pub fn accumulate_map(map: &PointCloud, cloud: &PointCloud, pose: &RigidTransform, voxel: &VoxelParams) -> PointCloud {
    let mut merged = PointCloud {
        points: map.points.clone(),
        normals: None,
        frame: "world".into(),
        stamp: map.stamp,
    };
    merged.points.extend(cloud.points.iter().map(|p| pose.transform_point(p)));
    voxel_filter(&merged, voxel)
}

#[derive(Debug, Clone)]
struct Reference {
    target: RegistrationTarget,
    pose: RigidTransform,
}

#[derive(Debug, Clone)]
struct Pending {
    cloud: PointCloud,
    /// reference-frame → this-frame motion
    from_reference: RigidTransform,
}

/// Session state. Call [`PipelineState::process_frame`] once per frame, in
/// stamp order.
#[derive(Debug, Clone, Default)]
pub struct PipelineState {
    reference: Option<Reference>,
    pending: Vec<Pending>,
    chain: RigidTransform,
    pose: RigidTransform,
    last_stamp: Option<f64>,
    pub trajectory: Vec<Pose>,
    pub map: PointCloud,
    pub logs: Vec<FrameLog>,
}

impl PipelineState {
    pub fn new() -> Self {
        Self {
            map: PointCloud::new(Vec::new()).in_frame("world"),
            ..Default::default()
        }
    }

    /// Pose of the latest frame (sensor in world).
    pub fn pose(&self) -> &RigidTransform {
        &self.pose
    }

    /// Runs one frame through the cascade. `vi_prior` is the odometry motion
    /// since the previous frame (ignored for the first frame).
    pub fn process_frame(
        &mut self,
        cloud: &PointCloud,
        vi_prior: &RigidTransform,
        cfg: &PipelineConfig,
    ) -> Result<FrameLog> {
        if let Some(last) = self.last_stamp {
            if !(cloud.stamp > last) {
                return Err(Error::NonMonotonicTimestamp {
                    stamp: cloud.stamp,
                    last,
                });
            }
        }
        let start = Instant::now();
        let frame = self.preprocess(cloud, cfg)?;
        self.last_stamp = Some(cloud.stamp);

        let Some(reference) = self.reference.as_ref() else {
            self.pose = RigidTransform::identity();
            let log = self.finish(frame.clone(), cfg, Outcome::prior(Provenance::Prior), start);
            self.set_reference(frame, cfg)?;
            self.chain = RigidTransform::identity();
            return Ok(log);
        };

        let prior = prior_from_vi(vi_prior, &cfg.extrinsics);
        let fallback_pose = self.pose.compose(&prior.inverse());
        self.chain = prior.compose(&self.chain);
        self.pending.push(Pending {
            cloud: frame.clone(),
            from_reference: self.chain,
        });
        if self.pending.len() < cfg.merge_window {
            self.pose = fallback_pose;
            return Ok(self.finish(frame, cfg, Outcome::prior(Provenance::Prior), start));
        }

        let merged = if self.pending.len() == 1 {
            frame.clone()
        } else {
            let to_latest = self.chain;
            let frames: Vec<(PointCloud, RigidTransform)> = self
                .pending
                .iter()
                .rev()
                .map(|p| (p.cloud.clone(), to_latest.compose(&p.from_reference.inverse())))
                .collect();
            merge_frames(&frames, &cfg.voxel)?
        };

        let outcome = register(reference, &merged, &self.chain, cfg)?;
        self.pose = match &outcome.refinement {
            // k → reference map is refinement ∘ chain⁻¹
            Some(refinement) => reference.pose.compose(refinement).compose(&self.chain.inverse()),
            None => fallback_pose,
        };
        let log = self.finish(frame, cfg, outcome, start);
        self.set_reference(merged, cfg)?;
        self.pending.clear();
        self.chain = RigidTransform::identity();
        Ok(log)
    }

    fn preprocess(&self, cloud: &PointCloud, cfg: &PipelineConfig) -> Result<PointCloud> {
        let filtered = voxel_filter(cloud, &cfg.voxel);
        if filtered.len() < cfg.normal_neighbors {
            let n = filtered.len();
            return Ok(PointCloud {
                normals: Some(vec![nalgebra::Vector3::zeros(); n]),
                ..filtered
            });
        }
        estimate_normals(&filtered, cfg.normal_neighbors, &Point3::origin())
    }

    fn set_reference(&mut self, cloud: PointCloud, _cfg: &PipelineConfig) -> Result<()> {
        self.reference = if cloud.is_empty() {
            // keep registering against the last non-empty reference
            self.reference.take().map(|mut r| {
                r.pose = self.pose;
                r
            })
        } else {
            Some(Reference {
                target: RegistrationTarget::new(cloud)?,
                pose: self.pose,
            })
        };
        Ok(())
    }

    fn finish(&mut self, frame: PointCloud, cfg: &PipelineConfig, outcome: Outcome, start: Instant) -> FrameLog {
        self.trajectory.push(Pose::new(frame.stamp, self.pose));
        self.map = accumulate_map(&self.map, &frame, &self.pose, &cfg.voxel);
        let log = FrameLog {
            stamp: frame.stamp,
            overlap_ratio: outcome.overlap_ratio,
            stability: outcome.stability.as_ref().map(StabilitySummary::from),
            provenance: outcome.provenance,
            fitness: outcome.fitness,
            iterations: outcome.iterations,
            correspondences: outcome.correspondences,
            elapsed: start.elapsed().as_secs_f64(),
        };
        self.logs.push(log.clone());
        log
    }
}

struct Outcome {
    provenance: Provenance,
    overlap_ratio: Option<f64>,
    stability: Option<StabilityReport>,
    refinement: Option<RigidTransform>,
    fitness: Option<f64>,
    iterations: Option<usize>,
    correspondences: Option<usize>,
}

impl Outcome {
    fn prior(provenance: Provenance) -> Self {
        Self {
            provenance,
            overlap_ratio: None,
            stability: None,
            refinement: None,
            fitness: None,
            iterations: None,
            correspondences: None,
        }
    }
}

fn register(reference: &Reference, current: &PointCloud, prior: &RigidTransform, cfg: &PipelineConfig) -> Result<Outcome> {
    if current.is_empty() {
        return Ok(Outcome::prior(Provenance::PriorLowOverlap));
    }
    let target = &reference.target;
    let overlap = compute_overlap_indexed(target.cloud(), target.index(), current, prior, &cfg.overlap)?;
    let mut outcome = Outcome {
        overlap_ratio: Some(overlap.ratio),
        ..Outcome::prior(Provenance::PriorLowOverlap)
    };
    if !sufficient_overlap(&overlap, &cfg.overlap) {
        return Ok(outcome);
    }

    outcome.provenance = Provenance::PriorUnstable;
    let source = &overlap.curr_subset_aligned;
    let Ok(initial) = sample(source, &cfg.sampling, cfg.sample_size) else {
        return Ok(outcome);
    };
    match assess_stability(&initial, cfg.c_thres) {
        Ok(report) => {
            let stable = report.stable;
            outcome.stability = Some(report);
            if !stable && cfg.gate_enabled {
                return Ok(outcome);
            }
        }
        Err(Error::TooFewSamples { .. }) => return Ok(outcome),
        Err(e) => return Err(e),
    }

    outcome.provenance = Provenance::PriorIcpFailed;
    match icp_register_sample(&initial, source, target, &cfg.sampling, cfg.sample_size, &cfg.icp) {
        Ok(res) => {
            outcome.provenance = Provenance::Icp;
            outcome.refinement = Some(res.transform);
            outcome.fitness = Some(res.fitness);
            outcome.iterations = Some(res.iterations);
            outcome.correspondences = Some(res.correspondences);
        }
        Err(Error::BadParams(msg)) => return Err(Error::BadParams(msg)),
        Err(_) => {}
    }
    Ok(outcome)
}

/// Copies a cloud into world coordinates at `pose`.
pub fn to_world(cloud: &PointCloud, pose: &RigidTransform) -> PointCloud {
    apply(pose, cloud).in_frame("world")
}
