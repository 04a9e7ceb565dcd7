use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose, RigidTransform};

/// Path shape. Points and vectors are world coordinates, z up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrajectoryKind {
    /// Horizontal circle around `center`, always looking at `look_at`
    /// (defaults to `center`).
    Orbit {
        center: [f64; 3],
        radius: f64,
        #[serde(default)]
        look_at: Option<[f64; 3]>,
        /// Swept angle; a full turn does not revisit the start pose.
        #[serde(default = "full_turn")]
        arc_deg: f64,
    },
    /// Straight line looking along the direction of travel.
    CorridorPass { start: [f64; 3], end: [f64; 3] },
    /// Straight line parallel to a wall at constant normal distance, looking
    /// straight at it. `wall_normal` points from the wall to the sensor side.
    WallFacing {
        wall_point: [f64; 3],
        wall_normal: [f64; 3],
        distance: f64,
        /// Direction of travel within the wall plane.
        along: [f64; 3],
        length: f64,
    },
    /// Boustrophedon sweep at constant altitude looking straight down.
    Lawnmower {
        origin: [f64; 3],
        width: f64,
        length: f64,
        rows: usize,
    },
}

fn full_turn() -> f64 {
    360.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySpec {
    #[serde(flatten)]
    pub kind: TrajectoryKind,
    pub steps: usize,
    #[serde(default = "default_rate")]
    pub rate_hz: f64,
}

fn default_rate() -> f64 {
    5.0
}

/// Sensor-in-world pose at `position` looking along `forward`, with image
/// "up" as close to `up` as possible. Sensor axes: x right, y down, z forward.
pub fn look_along(position: Point3<f64>, forward: Vector3<f64>, up: Vector3<f64>) -> Result<RigidTransform> {
    let z = forward
        .try_normalize(1e-12)
        .ok_or_else(|| Error::BadParams("zero viewing direction".into()))?;
    let x = z
        .cross(&up)
        .try_normalize(1e-9)
        .ok_or_else(|| Error::BadParams("up vector parallel to viewing direction".into()))?;
    let y = z.cross(&x);
    Ok(RigidTransform::from_matrix(&Matrix3::from_columns(&[x, y, z]), position.coords))
}

fn world_up_for(forward: &Vector3<f64>) -> Vector3<f64> {
    if forward.normalize().z.abs() > 0.99 {
        Vector3::x()
    } else {
        Vector3::z()
    }
}

/// Timestamped pose sequence at `rate_hz`, starting at t = 0.
pub fn make_trajectory(spec: &TrajectorySpec) -> Result<Vec<Pose>> {
    if spec.steps < 2 {
        return Err(Error::BadParams(format!("trajectory needs ≥ 2 steps, got {}", spec.steps)));
    }
    if !(spec.rate_hz > 0.0 && spec.rate_hz.is_finite()) {
        return Err(Error::BadParams(format!("rate_hz must be > 0, got {}", spec.rate_hz)));
    }
    let n = spec.steps;
    let dt = 1.0 / spec.rate_hz;
    let frac = |k: usize| k as f64 / (n - 1) as f64;
    let transforms: Vec<RigidTransform> = match &spec.kind {
        TrajectoryKind::Orbit {
            center,
            radius,
            look_at,
            arc_deg,
        } => {
            if !(*radius > 0.0) {
                return Err(Error::BadParams("orbit radius must be > 0".into()));
            }
            if !(*arc_deg > 0.0 && *arc_deg <= 360.0) {
                return Err(Error::BadParams("orbit arc must lie in (0°, 360°]".into()));
            }
            let c = Point3::from(*center);
            let target = Point3::from(look_at.unwrap_or(*center));
            let arc = arc_deg.to_radians();
            let denom = if *arc_deg == 360.0 { n } else { n - 1 } as f64;
            (0..n)
                .map(|k| {
                    let th = arc * k as f64 / denom;
                    let p = c + Vector3::new(th.cos(), th.sin(), 0.0) * *radius;
                    let fwd = target - p;
                    look_along(p, fwd, world_up_for(&fwd))
                })
                .collect::<Result<_>>()?
        }
        TrajectoryKind::CorridorPass { start, end } => {
            let (a, b) = (Point3::from(*start), Point3::from(*end));
            let fwd = b - a;
            if !(fwd.norm() > 0.0) {
                return Err(Error::BadParams("corridor start and end coincide".into()));
            }
            (0..n)
                .map(|k| look_along(a + fwd * frac(k), fwd, world_up_for(&fwd)))
                .collect::<Result<_>>()?
        }
        TrajectoryKind::WallFacing {
            wall_point,
            wall_normal,
            distance,
            along,
            length,
        } => {
            let nrm = Vector3::from(*wall_normal)
                .try_normalize(1e-12)
                .ok_or_else(|| Error::BadParams("zero wall normal".into()))?;
            let dir = Vector3::from(*along);
            let dir = (dir - nrm * dir.dot(&nrm))
                .try_normalize(1e-9)
                .ok_or_else(|| Error::BadParams("travel direction must have a component in the wall plane".into()))?;
            if !(*distance > 0.0 && *length > 0.0) {
                return Err(Error::BadParams("wall distance and length must be > 0".into()));
            }
            let start = Point3::from(*wall_point) + nrm * *distance - dir * (length / 2.0);
            (0..n)
                .map(|k| look_along(start + dir * (length * frac(k)), -nrm, world_up_for(&nrm)))
                .collect::<Result<_>>()?
        }
        TrajectoryKind::Lawnmower {
            origin,
            width,
            length,
            rows,
        } => {
            if *rows == 0 || !(*width > 0.0 && *length > 0.0) {
                return Err(Error::BadParams("lawnmower needs rows ≥ 1 and positive extents".into()));
            }
            let o = Point3::from(*origin);
            let spacing = if *rows > 1 { width / (*rows - 1) as f64 } else { 0.0 };
            let total = *rows as f64 * length + (*rows - 1) as f64 * spacing;
            (0..n)
                .map(|k| {
                    let s = total * frac(k);
                    let p = lawnmower_point(s, *length, spacing, *rows);
                    look_along(o + p, -Vector3::z(), Vector3::x())
                })
                .collect::<Result<_>>()?
        }
    };
    Ok(transforms
        .into_iter()
        .enumerate()
        .map(|(k, t)| Pose::new(k as f64 * dt, t))
        .collect())
}

/// Offset along a boustrophedon path after arc length `s`: rows run along
/// x, successive rows step along y.
fn lawnmower_point(s: f64, length: f64, spacing: f64, rows: usize) -> Vector3<f64> {
    let leg = length + spacing;
    let row = ((s / leg).floor() as usize).min(rows - 1);
    let r = s - row as f64 * leg;
    let forward = row.is_multiple_of(2);
    if r <= length || row == rows - 1 {
        let along = r.min(length);
        let x = if forward { along } else { length - along };
        Vector3::new(x, row as f64 * spacing, 0.0)
    } else {
        let x = if forward { length } else { 0.0 };
        Vector3::new(x, row as f64 * spacing + (r - length), 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: TrajectoryKind, steps: usize) -> TrajectorySpec {
        TrajectorySpec {
            kind,
            steps,
            rate_hz: 10.0,
        }
    }

    fn forward(t: &RigidTransform) -> Vector3<f64> {
        t.rotation_matrix().column(2).into()
    }

    #[test]
    fn orbit_stays_on_circle_facing_center() {
        let center = [0.5, -0.3, 1.2];
        let poses = make_trajectory(&spec(
            TrajectoryKind::Orbit {
                center,
                radius: 2.0,
                look_at: None,
                arc_deg: 360.0,
            },
            60,
        ))
        .unwrap();
        assert_eq!(poses.len(), 60);
        let c = Point3::from(center);
        for (k, p) in poses.iter().enumerate() {
            let pos = Point3::from(*p.transform.translation());
            assert!(((pos - c).norm() - 2.0).abs() < 1e-9);
            assert!((pos.z - c.z).abs() < 1e-12);
            let to_center = (c - pos).normalize();
            assert!((forward(&p.transform) - to_center).norm() < 1e-9);
            assert!((p.stamp - k as f64 * 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn wall_facing_looks_along_normal() {
        let poses = make_trajectory(&spec(
            TrajectoryKind::WallFacing {
                wall_point: [0.0, 0.0, 1.5],
                wall_normal: [0.0, -1.0, 0.0],
                distance: 1.5,
                along: [1.0, 0.0, 0.0],
                length: 2.0,
            },
            25,
        ))
        .unwrap();
        for p in &poses {
            assert!((forward(&p.transform) - Vector3::y()).norm() < 1e-9);
            assert!((p.transform.translation().y + 1.5).abs() < 1e-12);
        }
        let first = poses[0].transform.translation().x;
        let last = poses[24].transform.translation().x;
        assert!((first + 1.0).abs() < 1e-12 && (last - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sensor_axes_are_right_down_forward() {
        let t = look_along(Point3::origin(), Vector3::x(), Vector3::z()).unwrap();
        let r = t.rotation_matrix();
        assert!((r.column(0) - (-Vector3::y())).norm() < 1e-12);
        assert!((r.column(1) - (-Vector3::z())).norm() < 1e-12);
    }

    #[test]
    fn corridor_and_lawnmower_endpoints() {
        let poses = make_trajectory(&spec(
            TrajectoryKind::CorridorPass {
                start: [-2.0, 0.0, 1.0],
                end: [2.0, 0.0, 1.0],
            },
            5,
        ))
        .unwrap();
        assert!((poses[2].transform.translation() - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-12);
        assert!((forward(&poses[0].transform) - Vector3::x()).norm() < 1e-12);

        let mow = make_trajectory(&spec(
            TrajectoryKind::Lawnmower {
                origin: [0.0, 0.0, 3.0],
                width: 2.0,
                length: 4.0,
                rows: 3,
            },
            41,
        ))
        .unwrap();
        assert!((mow[0].transform.translation() - Vector3::new(0.0, 0.0, 3.0)).norm() < 1e-12);
        // three rows of 4 m plus two 1 m turns; odd row count ends at far end
        assert!((mow[40].transform.translation() - Vector3::new(4.0, 2.0, 3.0)).norm() < 1e-9);
        for p in &mow {
            assert!((forward(&p.transform) + Vector3::z()).norm() < 1e-12);
        }
    }

    #[test]
    fn invalid_params() {
        let bad = [
            spec(
                TrajectoryKind::CorridorPass {
                    start: [0.0; 3],
                    end: [1.0, 0.0, 0.0],
                },
                1,
            ),
            spec(
                TrajectoryKind::CorridorPass {
                    start: [1.0; 3],
                    end: [1.0; 3],
                },
                5,
            ),
            spec(
                TrajectoryKind::Orbit {
                    center: [0.0; 3],
                    radius: -1.0,
                    look_at: None,
                    arc_deg: 360.0,
                },
                5,
            ),
        ];
        for s in &bad {
            assert!(matches!(make_trajectory(s), Err(Error::BadParams(_))), "{s:?}");
        }
    }
}
