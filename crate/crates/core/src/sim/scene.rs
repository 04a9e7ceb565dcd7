use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::RigidTransform;

/// Ray hits closer than this are ignored (self-intersection guard).
const RAY_EPS: f64 = 1e-9;

/// Analytic surface primitive.
#[derive(Debug, Clone, PartialEq)]
pub enum Primitive {
    /// Rectangle `center + a·u + b·v`, `|a| ≤ half_u`, `|b| ≤ half_v`, with
    /// `u ⟂ v` unit vectors.
    Rect {
        center: Point3<f64>,
        u: Vector3<f64>,
        v: Vector3<f64>,
        half_u: f64,
        half_v: f64,
    },
    /// Surface of an oriented box; `pose` maps box coordinates to world.
    Box { pose: RigidTransform, half: Vector3<f64> },
    /// Lateral surface of a cylinder section. In `pose` coordinates the axis
    /// is +z, `0 ≤ z ≤ height`, and the azimuth lies in `[arc_start, arc_end]`.
    Cylinder {
        pose: RigidTransform,
        radius: f64,
        height: f64,
        arc_start: f64,
        arc_end: f64,
    },
}

impl Primitive {
    pub fn rect(center: Point3<f64>, u: Vector3<f64>, v: Vector3<f64>, half_u: f64, half_v: f64) -> Self {
        Primitive::Rect {
            center,
            u: u.normalize(),
            v: v.normalize(),
            half_u,
            half_v,
        }
    }

    pub fn full_cylinder(base: Point3<f64>, radius: f64, height: f64) -> Self {
        Primitive::Cylinder {
            pose: RigidTransform::from_translation(base.coords),
            radius,
            height,
            arc_start: -std::f64::consts::PI,
            arc_end: std::f64::consts::PI,
        }
    }

    /// Smallest ray parameter `t > 0` with `origin + t·dir` on the surface;
    /// `dir` need not be normalized.
    pub fn intersect(&self, origin: &Point3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        match self {
            Primitive::Rect {
                center,
                u,
                v,
                half_u,
                half_v,
            } => {
                let n = u.cross(v);
                let denom = dir.dot(&n);
                if denom == 0.0 {
                    return None;
                }
                let t = (center - origin).dot(&n) / denom;
                if !(t > RAY_EPS) {
                    return None;
                }
                let rel = origin + dir * t - center;
                (rel.dot(u).abs() <= *half_u && rel.dot(v).abs() <= *half_v).then_some(t)
            }
            Primitive::Box { pose, half } => {
                let inv = pose.inverse();
                let o = inv.transform_point(origin);
                let d = inv.transform_vector(dir);
                let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
                for i in 0..3 {
                    if d[i] == 0.0 {
                        if o[i].abs() > half[i] {
                            return None;
                        }
                        continue;
                    }
                    let a = (-half[i] - o[i]) / d[i];
                    let b = (half[i] - o[i]) / d[i];
                    t0 = t0.max(a.min(b));
                    t1 = t1.min(a.max(b));
                }
                if t0 > t1 {
                    return None;
                }
                [t0, t1].into_iter().find(|&t| t > RAY_EPS)
            }
            Primitive::Cylinder {
                pose,
                radius,
                height,
                arc_start,
                arc_end,
            } => {
                let inv = pose.inverse();
                let o = inv.transform_point(origin);
                let d = inv.transform_vector(dir);
                let a = d.x * d.x + d.y * d.y;
                if a == 0.0 {
                    return None;
                }
                let b = 2.0 * (o.x * d.x + o.y * d.y);
                let c = o.x * o.x + o.y * o.y - radius * radius;
                let disc = b * b - 4.0 * a * c;
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                let mut roots = [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)];
                roots.sort_by(f64::total_cmp);
                roots.into_iter().find(|&t| {
                    if !(t > RAY_EPS) {
                        return false;
                    }
                    let p = o + d * t;
                    let phi = p.y.atan2(p.x);
                    (0.0..=*height).contains(&p.z) && phi >= *arc_start && phi <= *arc_end
                })
            }
        }
    }

    /// Euclidean distance from `p` to the nearest point of the surface.
    pub fn distance(&self, p: &Point3<f64>) -> f64 {
        match self {
            Primitive::Rect {
                center,
                u,
                v,
                half_u,
                half_v,
            } => {
                let rel = p - center;
                let (a, b, h) = (rel.dot(u), rel.dot(v), rel.dot(&u.cross(v)));
                let da = (a.abs() - half_u).max(0.0);
                let db = (b.abs() - half_v).max(0.0);
                (da * da + db * db + h * h).sqrt()
            }
            Primitive::Box { pose, half } => {
                let q = pose.inverse().transform_point(p).coords.abs() - half;
                let outside = q.map(|x| x.max(0.0)).norm();
                let inside = q.max().min(0.0);
                (outside + inside).abs()
            }
            Primitive::Cylinder {
                pose,
                radius,
                height,
                arc_start,
                arc_end,
            } => {
                let q = pose.inverse().transform_point(p);
                let rho = (q.x * q.x + q.y * q.y).sqrt();
                let phi = q.y.atan2(q.x);
                let dz = if q.z < 0.0 {
                    -q.z
                } else if q.z > *height {
                    q.z - height
                } else {
                    0.0
                };
                if phi >= *arc_start && phi <= *arc_end {
                    return ((rho - radius).powi(2) + dz * dz).sqrt();
                }
                // nearest point lies on one of the two boundary generators
                [*arc_start, *arc_end]
                    .into_iter()
                    .map(|ang| {
                        let e = Point3::new(radius * ang.cos(), radius * ang.sin(), q.z.clamp(0.0, *height));
                        (q - e).norm()
                    })
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}

/// Named scene presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneKind {
    /// One large wall in the plane `y = 0`, facing −y.
    FlatWall,
    /// Walls at `y = ±1` over a floor at `z = 0`, open and uniform along x.
    SymmetricCanyon,
    /// Three orthogonal faces meeting at the origin, occupying the positive
    /// octant's boundary.
    Corner,
    /// Room interior `[−2, 2]² × [0, 2.5]` with furniture and a pillar.
    Room,
    /// Floor with scattered boxes of varied size and heading.
    BoxField,
}

impl SceneKind {
    pub const ALL: [SceneKind; 5] = [
        SceneKind::FlatWall,
        SceneKind::SymmetricCanyon,
        SceneKind::Corner,
        SceneKind::Room,
        SceneKind::BoxField,
    ];
}

/// Union of primitives.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scene {
    pub primitives: Vec<Primitive>,
}

impl Scene {
    pub fn new(primitives: Vec<Primitive>) -> Self {
        Self { primitives }
    }

    pub fn preset(kind: SceneKind) -> Self {
        let x = Vector3::x();
        let y = Vector3::y();
        let z = Vector3::z();
        let primitives = match kind {
            SceneKind::FlatWall => vec![Primitive::rect(Point3::new(0.0, 0.0, 1.5), x, z, 20.0, 10.0)],
            SceneKind::SymmetricCanyon => vec![
                Primitive::rect(Point3::new(0.0, 1.0, 1.5), x, z, 50.0, 1.5),
                Primitive::rect(Point3::new(0.0, -1.0, 1.5), x, z, 50.0, 1.5),
                Primitive::rect(Point3::new(0.0, 0.0, 0.0), x, y, 50.0, 1.0),
            ],
            SceneKind::Corner => vec![
                Primitive::rect(Point3::new(0.0, 1.5, 1.5), y, z, 1.5, 1.5),
                Primitive::rect(Point3::new(1.5, 0.0, 1.5), x, z, 1.5, 1.5),
                Primitive::rect(Point3::new(1.5, 1.5, 0.0), x, y, 1.5, 1.5),
            ],
            SceneKind::Room => room(),
            SceneKind::BoxField => box_field(),
        };
        Self { primitives }
    }

    /// Nearest hit along the ray, as `(t, primitive index)`.
    pub fn intersect(&self, origin: &Point3<f64>, dir: &Vector3<f64>) -> Option<(f64, usize)> {
        self.primitives
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.intersect(origin, dir).map(|t| (t, i)))
            .min_by(|a, b| a.0.total_cmp(&b.0))
    }

    /// Distance from `p` to the nearest surface.
    pub fn distance(&self, p: &Point3<f64>) -> f64 {
        self.primitives.iter().map(|s| s.distance(p)).fold(f64::INFINITY, f64::min)
    }
}

fn yawed_box(center: Point3<f64>, yaw: f64, half: Vector3<f64>) -> Primitive {
    let rot = RigidTransform::from_axis_angle(&Vector3::z(), yaw);
    Primitive::Box {
        pose: RigidTransform::from_translation(center.coords).compose(&rot),
        half,
    }
}

fn room() -> Vec<Primitive> {
    let (x, y, z) = (Vector3::x(), Vector3::y(), Vector3::z());
    let (h, top) = (2.0, 2.5);
    vec![
        Primitive::rect(Point3::new(0.0, 0.0, 0.0), x, y, h, h),
        Primitive::rect(Point3::new(0.0, 0.0, top), x, y, h, h),
        Primitive::rect(Point3::new(h, 0.0, top / 2.0), y, z, h, top / 2.0),
        Primitive::rect(Point3::new(-h, 0.0, top / 2.0), y, z, h, top / 2.0),
        Primitive::rect(Point3::new(0.0, h, top / 2.0), x, z, h, top / 2.0),
        Primitive::rect(Point3::new(0.0, -h, top / 2.0), x, z, h, top / 2.0),
        yawed_box(Point3::new(0.1, -0.1, 0.4), 0.35, Vector3::new(0.4, 0.3, 0.4)),
        yawed_box(Point3::new(-0.15, 0.25, 1.05), -0.2, Vector3::new(0.15, 0.2, 0.25)),
        Primitive::full_cylinder(Point3::new(0.5, 0.4, 0.0), 0.1, 1.6),
        // shelving and cabinets against the walls
        yawed_box(Point3::new(1.8, 0.9, 0.9), 0.0, Vector3::new(0.2, 0.5, 0.9)),
        yawed_box(Point3::new(-0.8, -1.8, 0.5), 0.0, Vector3::new(0.6, 0.2, 0.5)),
        yawed_box(Point3::new(-1.65, 1.2, 0.35), 0.5, Vector3::new(0.25, 0.3, 0.35)),
        yawed_box(Point3::new(1.2, -1.5, 0.3), -0.4, Vector3::new(0.3, 0.25, 0.3)),
    ]
}

fn box_field() -> Vec<Primitive> {
    let mut prims = vec![Primitive::rect(Point3::origin(), Vector3::x(), Vector3::y(), 8.0, 8.0)];
    let boxes = [
        (1.5, 0.5, 0.3, 0.4),
        (-1.2, 1.8, -0.5, 0.6),
        (0.4, -1.7, 0.9, 0.3),
        (-2.0, -1.0, 0.1, 0.5),
        (2.4, -2.2, -0.8, 0.35),
        (0.0, 2.8, 0.6, 0.45),
        (-3.0, 2.5, 0.2, 0.3),
        (3.0, 2.0, -0.3, 0.55),
    ];
    for (i, &(cx, cy, yaw, s)) in boxes.iter().enumerate() {
        let half = Vector3::new(s, s * (0.6 + 0.1 * i as f64), s * (0.8 + 0.15 * (i % 3) as f64));
        prims.push(yawed_box(Point3::new(cx, cy, half.z), yaw, half));
    }
    prims
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rect_hit_and_miss() {
        let r = Primitive::rect(Point3::origin(), Vector3::x(), Vector3::y(), 1.0, 1.0);
        let o = Point3::new(0.2, 0.3, 2.0);
        assert_eq!(r.intersect(&o, &-Vector3::z()), Some(2.0));
        assert_eq!(r.intersect(&o, &Vector3::z()), None);
        assert_eq!(r.intersect(&Point3::new(1.5, 0.0, 2.0), &-Vector3::z()), None);
        assert!((r.distance(&Point3::new(2.0, 0.0, 1.0)) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn box_from_inside_and_outside() {
        let b = yawed_box(Point3::origin(), 0.0, Vector3::new(1.0, 2.0, 3.0));
        assert_eq!(b.intersect(&Point3::origin(), &Vector3::x()), Some(1.0));
        assert_eq!(b.intersect(&Point3::new(-5.0, 0.0, 0.0), &Vector3::x()), Some(4.0));
        assert!((b.distance(&Point3::new(0.5, 0.0, 0.0)) - 0.5).abs() < 1e-15);
        assert!((b.distance(&Point3::new(0.0, 0.0, 5.0)) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn cylinder_section() {
        let c = Primitive::Cylinder {
            pose: RigidTransform::identity(),
            radius: 1.0,
            height: 2.0,
            arc_start: 0.0,
            arc_end: std::f64::consts::FRAC_PI_2,
        };
        let o = Point3::new(3.0, 0.5, 1.0);
        let t = c.intersect(&o, &-Vector3::x()).unwrap();
        assert!((t - (3.0 - 0.75f64.sqrt())).abs() < 1e-12);
        // negative-x side is outside the arc
        assert_eq!(c.intersect(&Point3::new(-3.0, -0.5, 1.0), &Vector3::x()), None);
        // beyond the arc end the closest point is the generator at (1, 0)
        assert!((c.distance(&Point3::new(1.0, -1.0, 1.0)) - 1.0).abs() < 1e-12);
    }

    /// Ray hits land on the surface they report.
    #[test]
    fn hits_lie_on_surfaces() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for kind in SceneKind::ALL {
            let scene = Scene::preset(kind);
            let mut hits = 0;
            for _ in 0..2000 {
                let o = Point3::new(rng.random_range(-1.0..1.0), rng.random_range(-0.8..0.8), rng.random_range(0.2..2.0));
                let d = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                if let Some((t, i)) = scene.intersect(&o, &d) {
                    hits += 1;
                    let p = o + d * t;
                    assert!(scene.primitives[i].distance(&p) < 1e-9, "{kind:?}");
                    assert!(scene.distance(&p) < 1e-9);
                }
            }
            assert!(hits > 100, "{kind:?}: {hits}");
        }
    }
}
