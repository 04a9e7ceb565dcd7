use std::time::Instant;

use nalgebra::Point3;

use super::correspondence::{find_correspondences, RegistrationTarget};
use super::point_to_plane::{point_to_plane_mse, solve_point_to_plane};
use super::ransac::reject_outliers;
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::RigidTransform;
use crate::pipeline::Provenance;
use crate::sampling::{sample, SampleSet, SamplingStrategy};

/// ICP parameters. Defaults are the tuned values used for short-range ToF
/// depth data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcpParams {
    /// Maximum correspondence distance (meters).
    pub d_corr_max: f64,
    /// RANSAC inlier threshold (meters).
    pub t_ransac_reject: f64,
    /// Stop when the norm of the update `[r; t]` falls below this.
    pub e_transform: f64,
    pub max_iterations: usize,
    /// Stop when the mean squared point-to-plane residual (m²) changes by
    /// less than this between consecutive iterations.
    pub e_euclidean_fitness: f64,
    pub resample_each_iteration: bool,
    /// RANSAC hypotheses per iteration.
    pub ransac_iterations: usize,
    /// Seed for RANSAC (and resampling, when enabled).
    pub seed: u64,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self {
            d_corr_max: 0.01,
            t_ransac_reject: 0.01,
            e_transform: 1e-8,
            max_iterations: 1000,
            e_euclidean_fitness: 0.005,
            resample_each_iteration: false,
            ransac_iterations: 100,
            seed: 0,
        }
    }
}

impl IcpParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d_corr_max", self.d_corr_max),
            ("t_ransac_reject", self.t_ransac_reject),
            ("e_transform", self.e_transform),
            ("e_euclidean_fitness", self.e_euclidean_fitness),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::BadParams(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::BadParams("max_iterations must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergedBy {
    TransformEps,
    FitnessEps,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationResult {
    /// Refinement mapping the prior-aligned source onto the target.
    pub transform: RigidTransform,
    pub provenance: Provenance,
    /// Mean squared point-to-plane residual (m²) of the last accepted
    /// correspondence set.
    pub fitness: f64,
    pub iterations: usize,
    pub converged_by: ConvergedBy,
    /// Post-match residual of every accepted iteration, in order.
    pub residual_history: Vec<f64>,
    pub correspondences: usize,
    pub elapsed: f64,
}

/// Samples `source` with `strategy`, then runs [`icp_register_sample`].
pub fn icp_register(
    source: &PointCloud,
    target: &RegistrationTarget,
    strategy: &SamplingStrategy,
    n: usize,
    params: &IcpParams,
) -> Result<RegistrationResult> {
    let initial = sample(source, strategy, n)?;
    icp_register_sample(&initial, source, target, strategy, n, params)
}

/// Point-to-plane ICP of a prior-aligned source onto `target`, starting from
/// an already drawn sample.
pub fn icp_register_sample(
    initial: &SampleSet,
    source: &PointCloud,
    target: &RegistrationTarget,
    strategy: &SamplingStrategy,
    n: usize,
    params: &IcpParams,
) -> Result<RegistrationResult> {
    params.validate()?;
    let start = Instant::now();
    let mut estimate = RigidTransform::identity();
    let mut accepted = estimate;
    let mut points: Vec<Point3<f64>> = initial.points.clone();
    let mut history: Vec<f64> = Vec::new();
    let mut correspondences = 0;
    let mut converged_by = ConvergedBy::MaxIter;
    let mut iterations = 0;

    for it in 0..params.max_iterations {
        iterations = it + 1;
        if params.resample_each_iteration && it > 0 {
            let moved = source.transformed(&estimate, source.frame.clone());
            let s = sample(&moved, &strategy.reseeded(params.seed.wrapping_add(it as u64)), n)?;
            points = s.points;
        }
        let matched = find_correspondences(&points, target, params.d_corr_max)?;
        let kept = reject_outliers(
            &matched,
            params.t_ransac_reject,
            params.ransac_iterations,
            params.seed.wrapping_add(0x9e37_79b9 ^ it as u64),
        )
        .kept;
        let mse = point_to_plane_mse(&kept);
        let prev = history.last().copied();
        if prev.is_some_and(|p| mse > p) {
            // the last step made the fit worse: undo it
            estimate = accepted;
            converged_by = ConvergedBy::FitnessEps;
            break;
        }
        history.push(mse);
        correspondences = kept.len();
        accepted = estimate;

        let step = solve_point_to_plane(&kept)?;
        let delta = step.exp();
        estimate = delta.compose(&estimate);
        for p in &mut points {
            *p = delta.transform_point(p);
        }
        if step.norm() < params.e_transform {
            converged_by = ConvergedBy::TransformEps;
            break;
        }
        if prev.is_some_and(|p| p - mse < params.e_euclidean_fitness) {
            converged_by = ConvergedBy::FitnessEps;
            break;
        }
    }

    Ok(RegistrationResult {
        transform: estimate,
        provenance: Provenance::Icp,
        fitness: *history.last().unwrap_or(&0.0),
        iterations,
        converged_by,
        residual_history: history,
        correspondences,
        elapsed: start.elapsed().as_secs_f64(),
    })
}
