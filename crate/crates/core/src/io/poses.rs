use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::{Pose, RigidTransform};

/// Parses `stamp tx ty tz qx qy qz qw` lines. Blank lines and lines starting
/// with `#` are skipped; quaternions are normalized.
pub fn parse_poses(text: &str, origin: &Path) -> Result<Vec<Pose>> {
    let mut poses = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: &str| Error::format(origin, format!("line {}: {msg}", lineno + 1));
        let values = line
            .split_whitespace()
            .map(|w| w.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| bad("non-numeric field"))?;
        let [stamp, tx, ty, tz, qx, qy, qz, qw] = values[..] else {
            return Err(bad(&format!("expected 8 fields, found {}", values.len())));
        };
        if !values.iter().all(|v| v.is_finite()) {
            return Err(bad("non-finite value"));
        }
        let qnorm = (qx * qx + qy * qy + qz * qz + qw * qw).sqrt();
        if qnorm < 1e-9 {
            return Err(bad("zero quaternion"));
        }
        let t = RigidTransform::from_quaternion_wxyz(qw, qx, qy, qz, Vector3::new(tx, ty, tz));
        poses.push(Pose::new(stamp, t));
    }
    Ok(poses)
}

pub fn read_poses(path: &Path) -> Result<Vec<Pose>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_poses(&text, path)
}

/// One line per pose; floats use shortest round-trip formatting, so reading
/// the file back reproduces every value exactly.
pub fn format_poses(poses: &[Pose]) -> String {
    let mut out = String::new();
    for p in poses {
        let t = p.transform.translation();
        let q = p.transform.rotation().quaternion();
        out.push_str(&format!(
            "{} {} {} {} {} {} {} {}\n",
            p.stamp, t.x, t.y, t.z, q.i, q.j, q.k, q.w
        ));
    }
    out
}

pub fn write_poses(path: &Path, poses: &[Pose]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(format_poses(poses).as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}
