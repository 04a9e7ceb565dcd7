use nalgebra::{Point3, Vector3};

use crate::geometry::RigidTransform;

/// An ordered set of 3-D points (meters) with optional per-point normals.
///
/// A normal of zero length marks a point whose neighborhood was too
/// degenerate to estimate one; such points are skipped by sampling.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Point3<f64>>,
    pub normals: Option<Vec<Vector3<f64>>>,
    pub frame: String,
    pub stamp: f64,
}

impl PointCloud {
    pub fn new(points: Vec<Point3<f64>>) -> Self {
        Self {
            points,
            normals: None,
            frame: String::new(),
            stamp: 0.0,
        }
    }

    pub fn with_normals(points: Vec<Point3<f64>>, normals: Vec<Vector3<f64>>) -> Self {
        assert_eq!(points.len(), normals.len(), "one normal per point");
        Self {
            points,
            normals: Some(normals),
            frame: String::new(),
            stamp: 0.0,
        }
    }

    pub fn stamped(mut self, stamp: f64) -> Self {
        self.stamp = stamp;
        self
    }

    pub fn in_frame(mut self, frame: impl Into<String>) -> Self {
        self.frame = frame.into();
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn has_normals(&self) -> bool {
        self.normals.is_some()
    }

    /// True if point `i` has a usable (unit) normal.
    pub fn normal_valid(&self, i: usize) -> bool {
        self.normals
            .as_ref()
            .is_some_and(|n| n[i].norm_squared() > 0.25)
    }

    /// Copies the points at `indices`, keeping normals when present.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            normals: self
                .normals
                .as_ref()
                .map(|n| indices.iter().map(|&i| n[i]).collect()),
            frame: self.frame.clone(),
            stamp: self.stamp,
        }
    }

    /// Appends `other`; normals survive only if both clouds carry them.
    pub fn extend(&mut self, other: &PointCloud) {
        match (&mut self.normals, &other.normals) {
            (Some(a), Some(b)) => a.extend_from_slice(b),
            (Some(_), None) => self.normals = None,
            (None, Some(_)) if self.points.is_empty() => {
                self.normals = other.normals.clone();
            }
            _ => {}
        }
        self.points.extend_from_slice(&other.points);
    }

    /// `p ↦ R·p + t`, normals rotated, frame tag replaced.
    pub fn transformed(&self, t: &RigidTransform, frame: impl Into<String>) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|p| t.transform_point(p)).collect(),
            normals: self
                .normals
                .as_ref()
                .map(|n| n.iter().map(|v| t.transform_vector(v)).collect()),
            frame: frame.into(),
            stamp: self.stamp,
        }
    }

    pub fn centroid(&self) -> Option<Point3<f64>> {
        if self.points.is_empty() {
            return None;
        }
        let sum = self
            .points
            .iter()
            .fold(Vector3::zeros(), |acc, p| acc + p.coords);
        Some(Point3::from(sum / self.points.len() as f64))
    }
}

/// Applies `t` to every point (and normal) of `cloud`, keeping its frame tag.
pub fn apply(t: &RigidTransform, cloud: &PointCloud) -> PointCloud {
    cloud.transformed(t, cloud.frame.clone())
}
