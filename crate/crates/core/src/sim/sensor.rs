use nalgebra::{Point3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::scene::Scene;
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::RigidTransform;

/// Pinhole time-of-flight sensor. Sensor axes: x right, y down, z forward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorModel {
    pub hfov_deg: f64,
    pub vfov_deg: f64,
    pub width: usize,
    pub height: usize,
    pub min_range: f64,
    pub max_range: f64,
    /// Standard deviation of the additive range noise (meters).
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self {
            hfov_deg: 62.0,
            vfov_deg: 45.0,
            width: 224,
            height: 171,
            min_range: 0.1,
            max_range: 4.0,
            noise_sigma: 0.001,
            seed: 0,
        }
    }
}

impl SensorModel {
    pub fn validate(&self) -> Result<()> {
        let fov_ok = |f: f64| f > 0.0 && f < 180.0;
        if !fov_ok(self.hfov_deg) || !fov_ok(self.vfov_deg) {
            return Err(Error::BadParams("field of view must lie in (0°, 180°)".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::BadParams("sensor resolution must be non-zero".into()));
        }
        if !(self.min_range >= 0.0 && self.max_range > self.min_range) {
            return Err(Error::BadParams("need 0 ≤ min_range < max_range".into()));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::BadParams("noise_sigma must be ≥ 0".into()));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    /// Unit ray direction through the center of pixel `(u, v)`.
    pub fn ray(&self, u: usize, v: usize) -> Vector3<f64> {
        let tx = (self.hfov_deg.to_radians() / 2.0).tan();
        let ty = (self.vfov_deg.to_radians() / 2.0).tan();
        let x = tx * (2.0 * (u as f64 + 0.5) / self.width as f64 - 1.0);
        let y = ty * (2.0 * (v as f64 + 0.5) / self.height as f64 - 1.0);
        Vector3::new(x, y, 1.0).normalize()
    }
}

/// Casts one ray per pixel from `pose` (sensor in world) and returns the
/// returns in sensor coordinates, with Gaussian noise on the range. Rays
/// whose true range falls outside `[min_range, max_range]` are dropped.
pub fn render_depth(scene: &Scene, pose: &RigidTransform, sensor: &SensorModel) -> Result<PointCloud> {
    sensor.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(sensor.seed);
    let noise = Normal::new(0.0, sensor.noise_sigma).map_err(|e| Error::BadParams(e.to_string()))?;
    let origin = Point3::from(*pose.translation());
    let mut points = Vec::with_capacity(sensor.width * sensor.height);
    for v in 0..sensor.height {
        for u in 0..sensor.width {
            let dir = sensor.ray(u, v);
            let world_dir = pose.transform_vector(&dir);
            let Some((range, _)) = scene.intersect(&origin, &world_dir) else {
                continue;
            };
            if range < sensor.min_range || range > sensor.max_range {
                continue;
            }
            let measured = if sensor.noise_sigma > 0.0 {
                range + noise.sample(&mut rng)
            } else {
                range
            };
            points.push(Point3::from(dir * measured));
        }
    }
    Ok(PointCloud::new(points).in_frame("depth"))
}
