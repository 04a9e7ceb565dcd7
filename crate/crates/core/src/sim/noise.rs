use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{relative_motion, Pose, RigidTransform};

/// Per-step odometry error: an isotropic Gaussian rotation vector and
/// translation, plus constant per-step biases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    /// Per-axis translation σ (meters).
    pub sigma_t: f64,
    /// Per-axis rotation σ (radians).
    pub sigma_r: f64,
    /// Translation added every step (meters).
    pub bias_t: [f64; 3],
    /// Rotation vector added every step (radians).
    pub bias_r: [f64; 3],
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            sigma_t: 0.002,
            sigma_r: 0.002,
            bias_t: [0.0; 3],
            bias_r: [0.0; 3],
            seed: 0,
        }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self {
            sigma_t: 0.0,
            sigma_r: 0.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_t >= 0.0 && self.sigma_r >= 0.0) {
            return Err(Error::BadParams("noise σ must be ≥ 0".into()));
        }
        Ok(())
    }
}

/// Relative motions `relative_motion(truth[k−1], truth[k])`, each left-
/// multiplied by a seeded error transform. Returns `truth.len() − 1` items.
pub fn perturb_odometry(truth: &[Pose], noise: &NoiseModel) -> Result<Vec<RigidTransform>> {
    noise.validate()?;
    if truth.len() < 2 {
        return Err(Error::BadParams(format!("need ≥ 2 poses, got {}", truth.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let bad = |e: rand_distr::NormalError| Error::BadParams(e.to_string());
    let nt = Normal::new(0.0, noise.sigma_t).map_err(bad)?;
    let nr = Normal::new(0.0, noise.sigma_r).map_err(bad)?;
    let mut draw = |d: &Normal<f64>, sigma: f64| -> Vector3<f64> {
        if sigma > 0.0 {
            Vector3::from_fn(|_, _| d.sample(&mut rng))
        } else {
            Vector3::zeros()
        }
    };
    Ok(truth
        .windows(2)
        .map(|w| {
            let rel = relative_motion(&w[0].transform, &w[1].transform);
            let rot = draw(&nr, noise.sigma_r) + Vector3::from(noise.bias_r);
            let trans = draw(&nt, noise.sigma_t) + Vector3::from(noise.bias_t);
            if rot == Vector3::zeros() && trans == Vector3::zeros() {
                return rel;
            }
            RigidTransform::from_rotation_vector(&rot, trans).compose(&rel)
        })
        .collect())
}

/// Absolute poses re-chained from relative motions, anchored at `start`.
pub fn chain_poses(start: &Pose, relatives: &[RigidTransform], stamps: &[f64]) -> Vec<Pose> {
    let mut out = vec![*start];
    let mut pose = start.transform;
    for (rel, &stamp) in relatives.iter().zip(stamps.iter().skip(1)) {
        pose = pose.compose(&rel.inverse());
        out.push(Pose::new(stamp, pose));
    }
    out
}
