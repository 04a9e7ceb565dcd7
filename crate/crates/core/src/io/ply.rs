use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{Point3, Vector3};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Writes a binary little-endian PLY with float32 `x y z` and, when the
/// cloud has normals, `nx ny nz`.
pub fn write_ply(path: &Path, cloud: &PointCloud) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_ply_to(&mut w, cloud).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn write_ply_to(w: &mut impl Write, cloud: &PointCloud) -> std::io::Result<()> {
    let normals = cloud.normals.as_deref();
    writeln!(w, "ply")?;
    writeln!(w, "format binary_little_endian 1.0")?;
    writeln!(w, "element vertex {}", cloud.len())?;
    for axis in ["x", "y", "z"] {
        writeln!(w, "property float {axis}")?;
    }
    if normals.is_some() {
        for axis in ["nx", "ny", "nz"] {
            writeln!(w, "property float {axis}")?;
        }
    }
    writeln!(w, "end_header")?;
    for (i, p) in cloud.points.iter().enumerate() {
        for c in p.iter() {
            w.write_all(&(*c as f32).to_le_bytes())?;
        }
        if let Some(ns) = normals {
            for c in ns[i].iter() {
                w.write_all(&(*c as f32).to_le_bytes())?;
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy)]
enum Scalar {
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        match name {
            "float" | "float32" => Some(Scalar::F32),
            "double" | "float64" => Some(Scalar::F64),
            _ => None,
        }
    }

    fn size(self) -> usize {
        match self {
            Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read(self, b: &[u8]) -> f64 {
        match self {
            Scalar::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

/// Reads a binary little-endian PLY whose only element is `vertex` with
/// float properties including `x y z` (and optionally `nx ny nz`).
pub fn read_ply(path: &Path) -> Result<PointCloud> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let bad = |msg: String| Error::format(path, msg);

    let mut line = String::new();
    let mut next_line = |r: &mut BufReader<File>| -> Result<String> {
        line.clear();
        let n = r.read_line(&mut line).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            return Err(Error::format(path, "unexpected end of header"));
        }
        Ok(line.trim_end().to_string())
    };

    if next_line(&mut r)? != "ply" {
        return Err(bad("missing 'ply' magic".into()));
    }
    let mut count: Option<usize> = None;
    let mut props: Vec<(String, Scalar)> = Vec::new();
    let mut format_ok = false;
    loop {
        let l = next_line(&mut r)?;
        let mut words = l.split_whitespace();
        match words.next() {
            Some("format") => {
                if words.next() != Some("binary_little_endian") {
                    return Err(bad(format!("unsupported PLY format line '{l}'")));
                }
                format_ok = true;
            }
            Some("comment") | Some("obj_info") => {}
            Some("element") => {
                let (name, n) = (words.next(), words.next());
                if name != Some("vertex") || count.is_some() {
                    return Err(bad(format!("unsupported element '{l}'")));
                }
                count = Some(n.and_then(|n| n.parse().ok()).ok_or_else(|| bad(format!("bad vertex count in '{l}'")))?);
            }
            Some("property") => {
                let ty = words.next().and_then(Scalar::parse).ok_or_else(|| bad(format!("unsupported property '{l}'")))?;
                let name = words.next().ok_or_else(|| bad(format!("unnamed property '{l}'")))?;
                props.push((name.to_string(), ty));
            }
            Some("end_header") => break,
            _ => return Err(bad(format!("unexpected header line '{l}'"))),
        }
    }
    if !format_ok {
        return Err(bad("missing format line".into()));
    }
    let count = count.ok_or_else(|| bad("missing vertex element".into()))?;

    let mut offset = 0;
    let mut layout = Vec::with_capacity(props.len());
    for (name, ty) in &props {
        layout.push((name.as_str(), *ty, offset));
        offset += ty.size();
    }
    let stride = offset;
    let find = |n: &str| layout.iter().find(|(name, _, _)| *name == n).map(|&(_, t, o)| (t, o));
    let xyz = ["x", "y", "z"].map(find);
    let nxyz = ["nx", "ny", "nz"].map(find);
    let [Some(px), Some(py), Some(pz)] = xyz else {
        return Err(bad("vertex element lacks x, y or z".into()));
    };
    let normal_props = match nxyz {
        [Some(a), Some(b), Some(c)] => Some([a, b, c]),
        [None, None, None] => None,
        _ => return Err(bad("incomplete normal properties".into())),
    };

    let mut body = vec![0u8; stride * count];
    r.read_exact(&mut body)
        .map_err(|_| bad(format!("expected {count} vertices of {stride} bytes")))?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra).map_err(|e| Error::io(path, e))? != 0 {
        return Err(bad("trailing bytes after vertex data".into()));
    }

    let get = |rec: &[u8], (t, o): (Scalar, usize)| t.read(&rec[o..]);
    let mut points = Vec::with_capacity(count);
    let mut normals = normal_props.map(|_| Vec::with_capacity(count));
    for rec in body.chunks_exact(stride.max(1)).take(count) {
        let p = Point3::new(get(rec, px), get(rec, py), get(rec, pz));
        if !p.iter().all(|c| c.is_finite()) {
            return Err(bad("non-finite vertex coordinate".into()));
        }
        points.push(p);
        if let (Some(ns), Some([a, b, c])) = (normals.as_mut(), normal_props) {
            ns.push(Vector3::new(get(rec, a), get(rec, b), get(rec, c)));
        }
    }
    Ok(PointCloud {
        points,
        normals,
        ..Default::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_float32() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ply");
        let pts = vec![Point3::new(0.1f32 as f64, -2.5, 3.25), Point3::new(1e-3f32 as f64, 0.0, -0.0)];
        let cloud = PointCloud::with_normals(pts.clone(), vec![Vector3::z(), Vector3::zeros()]);
        write_ply(&path, &cloud).unwrap();
        let back = read_ply(&path).unwrap();
        assert_eq!(back.points, pts);
        assert_eq!(back.normals, cloud.normals);

        let plain = PointCloud::new(pts.clone());
        write_ply(&path, &plain).unwrap();
        let back = read_ply(&path).unwrap();
        assert_eq!(back.points, pts);
        assert!(back.normals.is_none());
    }

    #[test]
    fn empty_cloud_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.ply");
        write_ply(&path, &PointCloud::default()).unwrap();
        assert!(read_ply(&path).unwrap().is_empty());
    }

    #[test]
    fn rejects_malformed_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ply");
        std::fs::write(&path, b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nend_header\n1\n").unwrap();
        assert!(matches!(read_ply(&path), Err(Error::Format { .. })));

        let mut truncated = b"ply\nformat binary_little_endian 1.0\nelement vertex 2\n".to_vec();
        truncated.extend_from_slice(b"property float x\nproperty float y\nproperty float z\nend_header\n");
        truncated.extend_from_slice(&[0u8; 12]);
        std::fs::write(&path, &truncated).unwrap();
        assert!(matches!(read_ply(&path), Err(Error::Format { .. })));

        assert!(matches!(read_ply(&dir.path().join("missing.ply")), Err(Error::Io { .. })));
    }

    #[test]
    fn reads_double_properties_and_extra_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.ply");
        let mut bytes = b"ply\nformat binary_little_endian 1.0\ncomment test\nelement vertex 1\n".to_vec();
        bytes.extend_from_slice(b"property double x\nproperty float intensity\nproperty double y\nproperty double z\nend_header\n");
        bytes.extend_from_slice(&1.5f64.to_le_bytes());
        bytes.extend_from_slice(&7.0f32.to_le_bytes());
        for v in [2.5f64, -3.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(&path, &bytes).unwrap();
        assert_eq!(read_ply(&path).unwrap().points, vec![Point3::new(1.5, 2.5, -3.0)]);
    }
}
