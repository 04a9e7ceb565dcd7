//! Rigid transforms, small-angle twists and pose-error metrics.
//!
//! A [`RigidTransform`] acting on a point computes `R·p + t`. Composition
//! follows function notation: `a.compose(&b)` applies `b` first, then `a`.
//!
//! Relative motions between consecutive sensor frames (odometry priors and
//! registration results) map coordinates of frame `k−1` into frame `k`, so a
//! sensor-in-world pose advances as `P_k = P_{k−1} ∘ motion⁻¹`.

use nalgebra::{Matrix3, Point3, Quaternion, Unit, UnitQuaternion, Vector3, Vector6};

use crate::error::{Error, Result};

/// Upper bound (exclusive) on the rotation magnitude of a [`TwistDelta`].
pub const SMALL_ANGLE_LIMIT: f64 = 0.5;

/// An element of SE(3): unit-quaternion rotation plus translation (meters).
///
/// The quaternion is kept normalized with `w ≥ 0` after every operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: UnitQuaternion<f64>,
    translation: Vector3<f64>,
}

fn canonical(q: Quaternion<f64>) -> UnitQuaternion<f64> {
    let q = if q.w < 0.0 { -q } else { q };
    UnitQuaternion::new_normalize(q)
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation: canonical(rotation.into_inner()),
            translation,
        }
    }

    /// Builds a transform from a raw (not necessarily normalized) quaternion
    /// given as `(w, x, y, z)`.
    pub fn from_quaternion_wxyz(w: f64, x: f64, y: f64, z: f64, translation: Vector3<f64>) -> Self {
        Self {
            rotation: canonical(Quaternion::new(w, x, y, z)),
            translation,
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation,
        }
    }

    /// Rotation of `angle` radians about `axis` (normalized internally).
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let axis = Unit::new_normalize(*axis);
        Self::new(UnitQuaternion::from_axis_angle(&axis, angle), Vector3::zeros())
    }

    /// Exact exponential of a rotation vector, with no bound on its magnitude.
    pub fn from_rotation_vector(rot: &Vector3<f64>, translation: Vector3<f64>) -> Self {
        Self::new(UnitQuaternion::from_scaled_axis(*rot), translation)
    }

    pub fn from_matrix(rotation: &Matrix3<f64>, translation: Vector3<f64>) -> Self {
        let rot = nalgebra::Rotation3::from_matrix(rotation);
        Self::new(UnitQuaternion::from_rotation_matrix(&rot), translation)
    }

    pub fn rotation(&self) -> &UnitQuaternion<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.rotation.to_rotation_matrix().into_inner()
    }

    /// Rotation angle in `[0, π]`.
    pub fn rotation_angle(&self) -> f64 {
        let q = self.rotation.quaternion();
        2.0 * q.vector().norm().atan2(q.w.abs())
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        let rotation = self.rotation.into_inner() * other.rotation.into_inner();
        RigidTransform {
            rotation: canonical(rotation),
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let inv = self.rotation.inverse();
        RigidTransform {
            rotation: canonical(inv.into_inner()),
            translation: -(inv * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        self.rotation * p + self.translation
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }
}

/// Small-angle 6-vector `[rot; trans]` (radians, meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistDelta {
    rot: Vector3<f64>,
    trans: Vector3<f64>,
}

impl TwistDelta {
    pub fn new(rot: Vector3<f64>, trans: Vector3<f64>) -> Result<Self> {
        let mag = rot.norm();
        if !(mag < SMALL_ANGLE_LIMIT) {
            return Err(Error::SmallAngleViolation(mag));
        }
        Ok(Self { rot, trans })
    }

    pub fn zero() -> Self {
        Self {
            rot: Vector3::zeros(),
            trans: Vector3::zeros(),
        }
    }

    /// Splits a stacked `[rot; trans]` vector.
    pub fn from_vector(x: &Vector6<f64>) -> Result<Self> {
        Self::new(x.fixed_rows::<3>(0).into(), x.fixed_rows::<3>(3).into())
    }

    pub fn rot(&self) -> &Vector3<f64> {
        &self.rot
    }

    pub fn trans(&self) -> &Vector3<f64> {
        &self.trans
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.rot.x,
            self.rot.y,
            self.rot.z,
            self.trans.x,
            self.trans.y,
            self.trans.z,
        )
    }

    pub fn norm(&self) -> f64 {
        self.to_vector().norm()
    }

    /// Exact axis-angle exponential of the rotation part, translation taken
    /// as-is.
    pub fn exp(&self) -> RigidTransform {
        if self.rot == Vector3::zeros() {
            return RigidTransform::from_translation(self.trans);
        }
        RigidTransform::from_rotation_vector(&self.rot, self.trans)
    }
}

/// Checked exponential of a raw twist; rejects `|rot| ≥ 0.5 rad`.
pub fn exp_small(rot: Vector3<f64>, trans: Vector3<f64>) -> Result<RigidTransform> {
    Ok(TwistDelta::new(rot, trans)?.exp())
}

/// Translation error (meters) and rotation error (radians) of an estimate.
pub fn pose_error(est: &RigidTransform, truth: &RigidTransform) -> (f64, f64) {
    let trans_err = (est.translation - truth.translation).norm();
    let rel = truth.rotation.inverse() * est.rotation;
    let rot_err = RigidTransform::new(rel, Vector3::zeros()).rotation_angle();
    (trans_err, rot_err)
}

/// A timestamped pose. Trajectories in this crate store sensor-in-world
/// transforms (the TUM convention).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub stamp: f64,
    pub transform: RigidTransform,
}

impl Pose {
    pub fn new(stamp: f64, transform: RigidTransform) -> Self {
        Self { stamp, transform }
    }
}

/// Fails unless stamps are strictly increasing.
pub fn check_monotonic(poses: &[Pose]) -> Result<()> {
    for w in poses.windows(2) {
        if !(w[1].stamp > w[0].stamp) {
            return Err(Error::NonMonotonicTimestamp {
                stamp: w[1].stamp,
                last: w[0].stamp,
            });
        }
    }
    Ok(())
}

/// Least-squares rigid transform mapping `src` onto `dst` (Kabsch/Umeyama
/// without scale). `None` for fewer than three pairs or a degenerate SVD.
pub fn fit_rigid(src: &[Point3<f64>], dst: &[Point3<f64>]) -> Option<RigidTransform> {
    if src.len() != dst.len() || src.len() < 3 {
        return None;
    }
    let n = src.len() as f64;
    let cs = src.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / n;
    let cd = dst.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / n;
    let mut h = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        h += (d.coords - cd) * (s.coords - cs).transpose();
    }
    let svd = h.svd(true, true);
    let (u, v_t) = (svd.u?, svd.v_t?);
    let mut s = Matrix3::identity();
    if (u * v_t).determinant() < 0.0 {
        s[(2, 2)] = -1.0;
    }
    let r = u * s * v_t;
    if !r.iter().all(|x| x.is_finite()) {
        return None;
    }
    Some(RigidTransform::from_matrix(&r, cd - r * cs))
}

/// Relative motion between two sensor-in-world poses, expressed as the map
/// from frame `from` coordinates into frame `to` coordinates.
pub fn relative_motion(from: &RigidTransform, to: &RigidTransform) -> RigidTransform {
    to.inverse().compose(from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn rz(angle: f64) -> RigidTransform {
        RigidTransform::from_axis_angle(&Vector3::z(), angle)
    }

    fn is_identity(t: &RigidTransform, tol: f64) -> bool {
        t.rotation_angle() <= tol && t.translation().norm() <= tol
    }

    #[test]
    fn compose_identity() {
        let i = RigidTransform::identity();
        assert_eq!(i.compose(&i), i);
    }

    #[test]
    fn compose_shared_axis_adds_angles() {
        let (t, r) = pose_error(&rz(FRAC_PI_2).compose(&rz(FRAC_PI_2)), &rz(std::f64::consts::PI));
        assert!(t < 1e-12 && r < 1e-9, "{t} {r}");
    }

    #[test]
    fn invert_examples() {
        let i = RigidTransform::identity();
        assert!(is_identity(&i.inverse(), 0.0));
        let t = RigidTransform::from_translation(Vector3::new(1.0, 2.0, 3.0));
        assert_eq!(*t.inverse().translation(), Vector3::new(-1.0, -2.0, -3.0));
    }

    #[test]
    fn exp_small_examples() {
        assert!(is_identity(&TwistDelta::zero().exp(), 0.0));
        let t = exp_small(Vector3::new(0.0, 0.0, 1e-3), Vector3::zeros()).unwrap();
        let (a, b) = pose_error(&t, &rz(1e-3));
        assert!(a == 0.0 && b < 1e-12);
        assert!(matches!(
            exp_small(Vector3::new(0.5, 0.0, 0.0), Vector3::zeros()),
            Err(Error::SmallAngleViolation(_))
        ));
    }

    #[test]
    fn exp_small_pure_translation_is_exact() {
        let d = TwistDelta::new(Vector3::zeros(), Vector3::new(0.1, -0.2, 0.3)).unwrap();
        let t = d.exp();
        assert_eq!(*t.rotation(), UnitQuaternion::identity());
        assert_eq!(*t.translation(), Vector3::new(0.1, -0.2, 0.3));
    }

    #[test]
    fn exp_small_angle_matches_reference_quaternion() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let axis = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
            .normalize();
            let rot = axis * 0.1;
            let t = exp_small(rot, Vector3::zeros()).unwrap();
            // reference: q = (cos(θ/2), sin(θ/2)·axis)
            let (s, c) = (0.05f64.sin(), 0.05f64.cos());
            let reference =
                RigidTransform::from_quaternion_wxyz(c, s * axis.x, s * axis.y, s * axis.z, Vector3::zeros());
            assert!((t.rotation_angle() - 0.1).abs() < 1e-12);
            assert!(pose_error(&t, &reference).1 < 1e-12);
        }
    }

    #[test]
    fn pose_error_examples() {
        let t = rz(0.3).compose(&RigidTransform::from_translation(Vector3::new(1.0, 0.0, 0.0)));
        assert_eq!(pose_error(&t, &t), (0.0, 0.0));
        let (a, b) = pose_error(
            &RigidTransform::identity(),
            &RigidTransform::from_translation(Vector3::new(0.1, 0.0, 0.0)),
        );
        assert!((a - 0.1).abs() < 1e-15 && b == 0.0);
        let (a, b) = pose_error(&rz(0.02), &RigidTransform::identity());
        assert!(a == 0.0 && (b - 0.02).abs() < 1e-12);
    }

    #[test]
    fn canonical_w_nonnegative() {
        let t = RigidTransform::from_quaternion_wxyz(-0.5, 0.5, 0.5, 0.5, Vector3::zeros());
        assert!(t.rotation().quaternion().w >= 0.0);
        assert!(rz(3.0).compose(&rz(3.0)).rotation().quaternion().w >= 0.0);
    }

    #[test]
    fn monotonic_check() {
        let i = RigidTransform::identity();
        assert!(check_monotonic(&[Pose::new(0.0, i), Pose::new(1.0, i)]).is_ok());
        assert!(check_monotonic(&[Pose::new(1.0, i), Pose::new(1.0, i)]).is_err());
    }

    fn arb_transform() -> impl Strategy<Value = RigidTransform> {
        (
            prop::array::uniform3(-3.0f64..3.0),
            prop::array::uniform3(-5.0f64..5.0),
        )
            .prop_map(|(r, t)| {
                RigidTransform::from_rotation_vector(&Vector3::from(r), Vector3::from(t))
            })
    }

    proptest! {
        #[test]
        fn inverse_cancels(t in arb_transform()) {
            let q = t.rotation().quaternion();
            prop_assert!((q.norm() - 1.0).abs() < 1e-9);
            prop_assert!(is_identity(&t.compose(&t.inverse()), 1e-9));
            let (a, b) = pose_error(&t.inverse().inverse(), &t);
            prop_assert!(a < 1e-12 && b < 1e-7);
        }

        #[test]
        fn compose_is_associative(a in arb_transform(), b in arb_transform(), c in arb_transform()) {
            let lhs = a.compose(&b.compose(&c));
            let rhs = a.compose(&b).compose(&c);
            let (dt, dr) = pose_error(&lhs, &rhs);
            prop_assert!(dt < 1e-9 && dr < 1e-7);
        }

        #[test]
        fn compose_acts_like_sequential_application(a in arb_transform(), b in arb_transform(),
                                                      p in prop::array::uniform3(-10.0f64..10.0)) {
            let p = Point3::from(p);
            let lhs = a.compose(&b).transform_point(&p);
            let rhs = a.transform_point(&b.transform_point(&p));
            prop_assert!((lhs - rhs).norm() < 1e-9);
        }
    }
}
