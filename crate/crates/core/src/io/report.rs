use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::eval::{evaluate, Metrics, DEFAULT_MAX_DT};
use crate::geometry::Pose;
use crate::pipeline::{FrameLog, PipelineConfig, PipelineState, Provenance};
use crate::sim::SimSequence;

use super::dataset::Dataset;
use super::ply::write_ply;
use super::poses::write_poses;

pub const TRAJECTORY_FILE: &str = "trajectory.txt";
pub const MAP_FILE: &str = "map.ply";
pub const FRAMES_FILE: &str = "frames.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";

/// Per-frame processing time statistics (seconds).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timing {
    pub mean: f64,
    pub p50: f64,
    pub p95: f64,
    pub max: f64,
}

impl Timing {
    /// Nearest-rank percentiles.
    pub fn from_samples(samples: &[f64]) -> Self {
        if samples.is_empty() {
            return Self::default();
        }
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        let rank = |q: f64| s[((q * s.len() as f64).ceil() as usize).clamp(1, s.len()) - 1];
        Self {
            mean: s.iter().sum::<f64>() / s.len() as f64,
            p50: rank(0.5),
            p95: rank(0.95),
            max: s[s.len() - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub frames: usize,
    /// Frame count per provenance label; every label is present.
    pub provenance: BTreeMap<String, usize>,
    pub timing: Timing,
    /// Present when ground truth was available.
    pub metrics: Option<Metrics>,
}

/// Everything a run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub trajectory: Vec<Pose>,
    pub map: PointCloud,
    pub frames: Vec<FrameLog>,
    pub summary: Summary,
}

impl RunReport {
    fn new(state: PipelineState, truth: Option<&[Pose]>) -> Result<Self> {
        let mut provenance: BTreeMap<String, usize> = Provenance::ALL.iter().map(|p| (p.name().to_string(), 0)).collect();
        for log in &state.logs {
            *provenance.entry(log.provenance.name().to_string()).or_default() += 1;
        }
        let elapsed: Vec<f64> = state.logs.iter().map(|l| l.elapsed).collect();
        let metrics = truth.map(|t| evaluate(&state.trajectory, t, DEFAULT_MAX_DT)).transpose()?;
        Ok(Self {
            summary: Summary {
                frames: state.logs.len(),
                provenance,
                timing: Timing::from_samples(&elapsed),
                metrics,
            },
            trajectory: state.trajectory,
            map: state.map,
            frames: state.logs,
        })
    }

    pub fn count(&self, p: Provenance) -> usize {
        self.summary.provenance[p.name()]
    }

    /// Copy with every wall-clock measurement zeroed; two runs with the same
    /// inputs and seeds agree exactly on this view.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.summary.timing = Timing::default();
        for f in &mut r.frames {
            f.elapsed = 0.0;
        }
        r
    }

    /// Writes the four output files into `dir` (created if needed). On
    /// failure, files already written are removed.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written: Vec<PathBuf> = Vec::new();
        let result = self.write_files(dir, &mut written);
        if result.is_err() {
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
        }
        result
    }

    fn write_files(&self, dir: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
        let path = dir.join(TRAJECTORY_FILE);
        written.push(path.clone());
        write_poses(&path, &self.trajectory)?;

        let path = dir.join(MAP_FILE);
        written.push(path.clone());
        write_ply(&path, &self.map)?;

        let path = dir.join(FRAMES_FILE);
        written.push(path.clone());
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        for f in &self.frames {
            let line = serde_json::to_string(f).map_err(|e| Error::format(&path, e.to_string()))?;
            writeln!(w, "{line}").map_err(|e| Error::io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let path = dir.join(SUMMARY_FILE);
        written.push(path.clone());
        let text = serde_json::to_string_pretty(&self.summary).map_err(|e| Error::format(&path, e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }
}

/// Runs the pipeline over an on-disk dataset, evaluating against its ground
/// truth when present.
pub fn run_dataset(ds: &Dataset, cfg: &PipelineConfig) -> Result<RunReport> {
    cfg.validate()?;
    let mut state = PipelineState::new();
    for i in 0..ds.frames.len() {
        let cloud = ds.load_cloud(i)?;
        state.process_frame(&cloud, &ds.odometry_motion(i), cfg)?;
    }
    RunReport::new(state, ds.ground_truth.as_deref())
}

/// Runs the pipeline over an in-memory simulated sequence and evaluates it
/// against the exact ground truth.
pub fn run_sequence(seq: &SimSequence, cfg: &PipelineConfig) -> Result<RunReport> {
    cfg.validate()?;
    if seq.frames.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut state = PipelineState::new();
    for (k, f) in seq.frames.iter().enumerate() {
        let motion = match k {
            0 => crate::geometry::RigidTransform::identity(),
            _ => seq.odometry_relative[k - 1],
        };
        state.process_frame(&f.cloud, &motion, cfg)?;
    }
    RunReport::new(state, Some(&seq.ground_truth()))
}
