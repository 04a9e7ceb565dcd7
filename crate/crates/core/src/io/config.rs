use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::overlap::OverlapParams;
use crate::pipeline::PipelineConfig;
use crate::preprocessing::VoxelParams;
use crate::sampling::{SamplingStrategy, DEFAULT_BUCKETS_PER_AXIS};
use crate::sim::{Extrinsics, SimConfig};
use crate::solver::IcpParams;

/// Sampling strategy names accepted in files and on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyName {
    All,
    Uniform,
    Random,
    NormalSpace,
}

impl std::str::FromStr for StrategyName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "all" => Ok(Self::All),
            "uniform" => Ok(Self::Uniform),
            "random" => Ok(Self::Random),
            "normal-space" => Ok(Self::NormalSpace),
            other => Err(format!("unknown strategy '{other}' (expected all, uniform, random or normal-space)")),
        }
    }
}

/// Flat, file-friendly form of [`PipelineConfig`]. Unknown keys are errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub d_corr_max: f64,
    pub t_ransac_reject: f64,
    pub e_transform: f64,
    pub max_iterations: usize,
    pub e_euclidean_fitness: f64,
    pub c_thres: f64,
    pub ransac_iterations: usize,
    pub resample_each_iteration: bool,
    pub voxel_leaf: f64,
    pub normal_neighbors: usize,
    pub overlap_radius: f64,
    pub min_overlap_ratio: f64,
    pub min_overlap_points: usize,
    pub strategy: StrategyName,
    pub sample_size: usize,
    pub buckets_per_axis: usize,
    /// Seeds sampling and RANSAC.
    pub seed: u64,
    pub merge_window: usize,
    pub gate_enabled: bool,
    /// Overrides the dataset's own mount when present.
    pub extrinsics: Option<Extrinsics>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::from_pipeline(&PipelineConfig::default())
    }
}

impl RunConfig {
    pub fn from_pipeline(cfg: &PipelineConfig) -> Self {
        let (strategy, seed, buckets) = match cfg.sampling {
            SamplingStrategy::All => (StrategyName::All, 0, DEFAULT_BUCKETS_PER_AXIS),
            SamplingStrategy::Uniform => (StrategyName::Uniform, 0, DEFAULT_BUCKETS_PER_AXIS),
            SamplingStrategy::Random { seed } => (StrategyName::Random, seed, DEFAULT_BUCKETS_PER_AXIS),
            SamplingStrategy::NormalSpace { seed, buckets_per_axis } => (StrategyName::NormalSpace, seed, buckets_per_axis),
            SamplingStrategy::CovarianceBalanced => (StrategyName::NormalSpace, 0, DEFAULT_BUCKETS_PER_AXIS),
        };
        let identity = cfg.extrinsics == crate::geometry::RigidTransform::identity();
        Self {
            d_corr_max: cfg.icp.d_corr_max,
            t_ransac_reject: cfg.icp.t_ransac_reject,
            e_transform: cfg.icp.e_transform,
            max_iterations: cfg.icp.max_iterations,
            e_euclidean_fitness: cfg.icp.e_euclidean_fitness,
            c_thres: cfg.c_thres,
            ransac_iterations: cfg.icp.ransac_iterations,
            resample_each_iteration: cfg.icp.resample_each_iteration,
            voxel_leaf: cfg.voxel.leaf(),
            normal_neighbors: cfg.normal_neighbors,
            overlap_radius: cfg.overlap.radius,
            min_overlap_ratio: cfg.overlap.min_ratio,
            min_overlap_points: cfg.overlap.min_points,
            strategy,
            sample_size: cfg.sample_size,
            buckets_per_axis: buckets,
            seed: seed.max(cfg.icp.seed),
            merge_window: cfg.merge_window,
            gate_enabled: cfg.gate_enabled,
            extrinsics: (!identity).then(|| Extrinsics::from_transform(&cfg.extrinsics)),
        }
    }

    /// Validated pipeline configuration. `fallback_extrinsics` applies when
    /// the file names none.
    pub fn to_pipeline(&self, fallback_extrinsics: Option<&Extrinsics>) -> Result<PipelineConfig> {
        let sampling = match self.strategy {
            StrategyName::All => SamplingStrategy::All,
            StrategyName::Uniform => SamplingStrategy::Uniform,
            StrategyName::Random => SamplingStrategy::Random { seed: self.seed },
            StrategyName::NormalSpace => SamplingStrategy::NormalSpace {
                seed: self.seed,
                buckets_per_axis: self.buckets_per_axis,
            },
        };
        if self.buckets_per_axis == 0 {
            return Err(Error::BadParams("buckets_per_axis must be ≥ 1".into()));
        }
        let extrinsics = match self.extrinsics.as_ref().or(fallback_extrinsics) {
            Some(e) => e.transform()?,
            None => crate::geometry::RigidTransform::identity(),
        };
        let cfg = PipelineConfig {
            extrinsics,
            voxel: VoxelParams::new(self.voxel_leaf)?,
            normal_neighbors: self.normal_neighbors,
            overlap: OverlapParams {
                radius: self.overlap_radius,
                min_ratio: self.min_overlap_ratio,
                min_points: self.min_overlap_points,
            },
            sampling,
            sample_size: self.sample_size,
            c_thres: self.c_thres,
            icp: IcpParams {
                d_corr_max: self.d_corr_max,
                t_ransac_reject: self.t_ransac_reject,
                e_transform: self.e_transform,
                max_iterations: self.max_iterations,
                e_euclidean_fitness: self.e_euclidean_fitness,
                resample_each_iteration: self.resample_each_iteration,
                ransac_iterations: self.ransac_iterations,
                seed: self.seed,
            },
            merge_window: self.merge_window,
            gate_enabled: self.gate_enabled,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::format(origin, e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }
}

/// Reads and validates a simulation description.
pub fn load_sim_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cfg: SimConfig = toml::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let rc = RunConfig::default();
        let back = RunConfig::parse(&rc.to_toml(), Path::new("mem")).unwrap();
        assert_eq!(back, rc);
        assert_eq!(back.to_pipeline(None).unwrap(), PipelineConfig::default());
    }

    #[test]
    fn profile_round_trips() {
        let cfg = PipelineConfig::loose_prior();
        assert_eq!(RunConfig::from_pipeline(&cfg).to_pipeline(None).unwrap(), cfg);
    }

    #[test]
    fn partial_file_keeps_other_defaults() {
        let rc = RunConfig::parse("c_thres = 8.0\nstrategy = \"random\"\nseed = 4\n", Path::new("mem")).unwrap();
        let cfg = rc.to_pipeline(None).unwrap();
        assert_eq!(cfg.c_thres, 8.0);
        assert_eq!(cfg.sampling, SamplingStrategy::Random { seed: 4 });
        assert_eq!(cfg.icp, IcpParams { seed: 4, ..IcpParams::default() });
    }

    #[test]
    fn rejects_typos_and_bad_values() {
        assert!(matches!(RunConfig::parse("d_corr = 0.1\n", Path::new("mem")), Err(Error::Format { .. })));
        let rc = RunConfig::parse("d_corr_max = -1.0\n", Path::new("mem")).unwrap();
        assert!(matches!(rc.to_pipeline(None), Err(Error::BadParams(_))));
        let rc = RunConfig::parse("merge_window = 9\n", Path::new("mem")).unwrap();
        assert!(matches!(rc.to_pipeline(None), Err(Error::BadParams(_))));
    }

    #[test]
    fn file_extrinsics_override_dataset() {
        let ds = Extrinsics {
            translation: [0.1, 0.0, 0.0],
            rotation_xyzw: [0.0, 0.0, 0.0, 1.0],
        };
        let cfg = RunConfig::default().to_pipeline(Some(&ds)).unwrap();
        assert_eq!(cfg.extrinsics.translation().x, 0.1);
        let own = RunConfig {
            extrinsics: Some(Extrinsics::default()),
            ..RunConfig::default()
        };
        assert_eq!(own.to_pipeline(Some(&ds)).unwrap().extrinsics.translation().x, 0.0);
    }
}
