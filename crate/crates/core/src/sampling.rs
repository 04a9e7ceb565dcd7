//! Point selection for stability analysis and ICP.
//!
//! Normal-space sampling buckets the normals on the unit sphere by azimuth
//! and cosine of inclination (equal-area bins) and draws round-robin from the
//! occupied buckets, so that every observed surface orientation is
//! represented about equally.

use std::f64::consts::PI;

use nalgebra::{Point3, Vector3};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Default number of sampled points.
pub const DEFAULT_SAMPLE_SIZE: usize = 500;
/// Default bins per axis of the normal-sphere grid.
pub const DEFAULT_BUCKETS_PER_AXIS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingStrategy {
    All,
    Uniform,
    Random { seed: u64 },
    NormalSpace { seed: u64, buckets_per_axis: usize },
    /// Selection that balances the eigenvectors of the constraint matrix.
    /// Named for completeness; [`sample`] rejects it.
    CovarianceBalanced,
}

impl Default for SamplingStrategy {
    fn default() -> Self {
        SamplingStrategy::NormalSpace {
            seed: 0,
            buckets_per_axis: DEFAULT_BUCKETS_PER_AXIS,
        }
    }
}

impl SamplingStrategy {
    /// Same strategy with a different seed (no-op for seedless variants).
    pub fn reseeded(self, seed: u64) -> Self {
        match self {
            SamplingStrategy::Random { .. } => SamplingStrategy::Random { seed },
            SamplingStrategy::NormalSpace { buckets_per_axis, .. } => {
                SamplingStrategy::NormalSpace { seed, buckets_per_axis }
            }
            other => other,
        }
    }
}

/// Selected points with their (unit) normals.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub indices: Vec<usize>,
    pub points: Vec<Point3<f64>>,
    pub normals: Vec<Vector3<f64>>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    fn resolve(cloud: &PointCloud, indices: Vec<usize>) -> Self {
        let normals = cloud.normals.as_ref().expect("checked by caller");
        SampleSet {
            points: indices.iter().map(|&i| cloud.points[i]).collect(),
            normals: indices.iter().map(|&i| normals[i]).collect(),
            indices,
        }
    }

    /// Builds a sample directly from points and normals (indices are
    /// positional).
    pub fn from_parts(points: Vec<Point3<f64>>, normals: Vec<Vector3<f64>>) -> Self {
        assert_eq!(points.len(), normals.len());
        SampleSet {
            indices: (0..points.len()).collect(),
            points,
            normals,
        }
    }
}

/// Bucket of a unit normal on a `b × b` (azimuth × cos-inclination) grid.
pub fn normal_bucket(n: &Vector3<f64>, buckets_per_axis: usize) -> usize {
    let b = buckets_per_axis;
    let azimuth = n.y.atan2(n.x).rem_euclid(2.0 * PI);
    let az = ((azimuth / (2.0 * PI)) * b as f64) as usize;
    let incl = (((n.z.clamp(-1.0, 1.0) + 1.0) / 2.0) * b as f64) as usize;
    az.min(b - 1) * b + incl.min(b - 1)
}

/// Draws up to `n` points from `cloud` with `strategy`. Points with a
/// degenerate normal are never selected.
pub fn sample(cloud: &PointCloud, strategy: &SamplingStrategy, n: usize) -> Result<SampleSet> {
    let Some(normals) = cloud.normals.as_ref() else {
        return Err(Error::MissingNormals);
    };
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if n == 0 {
        return Err(Error::BadParams("sample size must be ≥ 1".into()));
    }
    let valid: Vec<usize> = (0..cloud.len()).filter(|&i| cloud.normal_valid(i)).collect();

    let indices = match *strategy {
        SamplingStrategy::All => valid,
        SamplingStrategy::Uniform => {
            let step = valid.len().div_ceil(n).max(1);
            valid.into_iter().step_by(step).collect()
        }
        SamplingStrategy::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut valid = valid;
            valid.shuffle(&mut rng);
            valid.truncate(n);
            valid
        }
        SamplingStrategy::NormalSpace { seed, buckets_per_axis } => {
            if buckets_per_axis == 0 {
                return Err(Error::BadParams("buckets_per_axis must be ≥ 1".into()));
            }
            let mut buckets = vec![Vec::new(); buckets_per_axis * buckets_per_axis];
            for i in valid {
                buckets[normal_bucket(&normals[i], buckets_per_axis)].push(i);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut buckets: Vec<Vec<usize>> = buckets.into_iter().filter(|b| !b.is_empty()).collect();
            for b in &mut buckets {
                b.shuffle(&mut rng);
            }
            let total: usize = buckets.iter().map(Vec::len).sum();
            let target = n.min(total);
            let mut out = Vec::with_capacity(target);
            let mut round = 0;
            while out.len() < target {
                for b in &buckets {
                    if out.len() == target {
                        break;
                    }
                    if let Some(&i) = b.get(round) {
                        out.push(i);
                    }
                }
                round += 1;
            }
            out
        }
        SamplingStrategy::CovarianceBalanced => {
            return Err(Error::BadParams(
                "covariance-balanced sampling is not supported".into(),
            ))
        }
    };
    Ok(SampleSet::resolve(cloud, indices))
}

/// `1 − |mean normal|`: 0 when all normals agree, approaching 1 for an
/// isotropic distribution.
pub fn normal_dispersion(s: &SampleSet) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::EmptySample);
    }
    let mean = s.normals.iter().fold(Vector3::zeros(), |acc, n| acc + n) / s.len() as f64;
    Ok((1.0 - mean.norm()).clamp(0.0, 1.0))
}
