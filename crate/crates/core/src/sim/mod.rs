//! Synthetic depth sequences with exact ground truth.
//!
//! A [`SimConfig`] names a scene preset, a trajectory, a sensor and an
//! odometry noise model; [`simulate`] renders every pose and produces noisy
//! odometry in the body frame of the odometry source.

mod noise;
mod scene;
mod sensor;
mod trajectory;

pub use noise::{chain_poses, perturb_odometry, NoiseModel};
pub use scene::{Primitive, Scene, SceneKind};
pub use sensor::{render_depth, SensorModel};
pub use trajectory::{look_along, make_trajectory, TrajectoryKind, TrajectorySpec};

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::{Pose, RigidTransform};

/// Rigid mount between odometry body and depth sensor, as a translation and
/// an `[x, y, z, w]` quaternion mapping body coordinates to sensor
/// coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrinsics {
    pub translation: [f64; 3],
    pub rotation_xyzw: [f64; 4],
}

impl Default for Extrinsics {
    fn default() -> Self {
        Self {
            translation: [0.0; 3],
            rotation_xyzw: [0.0, 0.0, 0.0, 1.0],
        }
    }
}

impl Extrinsics {
    pub fn transform(&self) -> Result<RigidTransform> {
        let [x, y, z, w] = self.rotation_xyzw;
        let norm = (x * x + y * y + z * z + w * w).sqrt();
        if !(norm > 1e-9 && norm.is_finite()) {
            return Err(Error::BadParams("extrinsic quaternion must be non-zero".into()));
        }
        Ok(RigidTransform::from_quaternion_wxyz(w, x, y, z, self.translation.into()))
    }

    pub fn from_transform(t: &RigidTransform) -> Self {
        let q = t.rotation().quaternion();
        Self {
            translation: (*t.translation()).into(),
            rotation_xyzw: [q.i, q.j, q.k, q.w],
        }
    }
}

/// Full description of a synthetic run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Master seed. Each frame's sensor noise and the odometry noise use
    /// seeds derived from it; the `seed` fields of `sensor` and `noise` are
    /// ignored.
    #[serde(default)]
    pub seed: u64,
    pub scene: SceneKind,
    pub trajectory: TrajectorySpec,
    #[serde(default)]
    pub sensor: SensorModel,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub extrinsics: Extrinsics,
}

impl SimConfig {
    /// Scene with its canonical trajectory.
    pub fn preset(scene: SceneKind, steps: usize) -> Self {
        let kind = match scene {
            SceneKind::FlatWall => TrajectoryKind::WallFacing {
                wall_point: [0.0, 0.0, 1.5],
                wall_normal: [0.0, -1.0, 0.0],
                distance: 1.5,
                along: [1.0, 0.0, 0.0],
                length: 0.05 * steps as f64,
            },
            SceneKind::SymmetricCanyon => TrajectoryKind::CorridorPass {
                start: [-0.05 * steps as f64 / 2.0, 0.0, 1.0],
                end: [0.05 * steps as f64 / 2.0, 0.0, 1.0],
            },
            SceneKind::Corner => TrajectoryKind::Orbit {
                center: [1.6, 1.6, 2.2],
                radius: 0.3,
                look_at: Some([1.0, 1.0, 0.0]),
                arc_deg: 360.0,
            },
            SceneKind::Room => TrajectoryKind::Orbit {
                center: [0.0, 0.0, 1.3],
                radius: 1.2,
                look_at: Some([0.0, 0.0, 0.5]),
                arc_deg: 360.0,
            },
            SceneKind::BoxField => TrajectoryKind::Lawnmower {
                origin: [-3.0, -2.0, 2.5],
                width: 4.0,
                length: 6.0,
                rows: 3,
            },
        };
        Self {
            seed: 0,
            scene,
            trajectory: TrajectorySpec {
                kind,
                steps,
                rate_hz: 5.0,
            },
            sensor: SensorModel::default(),
            noise: NoiseModel::default(),
            extrinsics: Extrinsics::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Checks every parameter that [`simulate`] would otherwise reject
    /// midway.
    pub fn validate(&self) -> Result<()> {
        self.sensor.validate()?;
        self.noise.validate()?;
        self.extrinsics.transform()?;
        if self.trajectory.steps == 0 {
            return Err(Error::BadParams("trajectory needs at least one step".into()));
        }
        let probe = TrajectorySpec {
            steps: self.trajectory.steps.max(2),
            ..self.trajectory.clone()
        };
        make_trajectory(&probe).map(|_| ())
    }
}

/// One rendered frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SimFrame {
    /// Ground-truth depth-sensor pose (sensor in world).
    pub truth: Pose,
    /// Returns in sensor coordinates, stamped.
    pub cloud: PointCloud,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSequence {
    pub frames: Vec<SimFrame>,
    /// Noisy odometry-body poses, one per frame.
    pub odometry: Vec<Pose>,
    /// Noisy body-frame relative motions, `frames.len() − 1` of them.
    pub odometry_relative: Vec<RigidTransform>,
    /// Maps body coordinates to depth-sensor coordinates.
    pub extrinsics: RigidTransform,
}

impl SimSequence {
    pub fn ground_truth(&self) -> Vec<Pose> {
        self.frames.iter().map(|f| f.truth).collect()
    }
}

/// Decorrelates per-purpose seeds derived from one master seed.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ index.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const SENSOR_STREAM: u64 = 1;
const ODOMETRY_STREAM: u64 = 2;

/// Renders `truth` poses of the depth sensor in `scene` and derives noisy
/// odometry. `truth` must hold at least one pose.
pub fn simulate_poses(
    scene: &Scene,
    truth: &[Pose],
    sensor: &SensorModel,
    noise: &NoiseModel,
    extrinsics: &RigidTransform,
    seed: u64,
) -> Result<SimSequence> {
    if truth.is_empty() {
        return Err(Error::BadParams("simulation needs at least one pose".into()));
    }
    let frames = truth
        .iter()
        .enumerate()
        .map(|(k, pose)| {
            let s = sensor.with_seed(derive_seed(seed, SENSOR_STREAM, k as u64));
            Ok(SimFrame {
                truth: *pose,
                cloud: render_depth(scene, &pose.transform, &s)?.stamped(pose.stamp),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // body pose = sensor pose ∘ extrinsics
    let body: Vec<Pose> = truth
        .iter()
        .map(|p| Pose::new(p.stamp, p.transform.compose(extrinsics)))
        .collect();
    let noise = NoiseModel {
        seed: derive_seed(seed, ODOMETRY_STREAM, 0),
        ..*noise
    };
    let odometry_relative = if body.len() >= 2 {
        perturb_odometry(&body, &noise)?
    } else {
        Vec::new()
    };
    let stamps: Vec<f64> = body.iter().map(|p| p.stamp).collect();
    let odometry = chain_poses(&body[0], &odometry_relative, &stamps);
    Ok(SimSequence {
        frames,
        odometry,
        odometry_relative,
        extrinsics: *extrinsics,
    })
}

/// Renders the configured trajectory. A one-step trajectory is allowed and
/// yields a single frame.
pub fn simulate(config: &SimConfig) -> Result<SimSequence> {
    config.validate()?;
    let truth = if config.trajectory.steps == 1 {
        let two = TrajectorySpec {
            steps: 2,
            ..config.trajectory.clone()
        };
        make_trajectory(&two)?.into_iter().take(1).collect()
    } else {
        make_trajectory(&config.trajectory)?
    };
    simulate_poses(
        &Scene::preset(config.scene),
        &truth,
        &config.sensor,
        &config.noise,
        &config.extrinsics.transform()?,
        config.seed,
    )
}
