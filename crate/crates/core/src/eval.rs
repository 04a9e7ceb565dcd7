//! Trajectory accuracy metrics against ground truth.

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{fit_rigid, pose_error, relative_motion, Pose, RigidTransform};

/// Stamps closer than this are considered the same instant.
pub const DEFAULT_MAX_DT: f64 = 0.05;

/// Index pairs `(estimate, truth)` matching every estimated pose to the
/// nearest ground-truth stamp.
pub fn associate(est: &[Pose], truth: &[Pose], max_dt: f64) -> Result<Vec<(usize, usize)>> {
    if est.is_empty() || truth.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut order: Vec<usize> = (0..truth.len()).collect();
    order.sort_by(|&a, &b| truth[a].stamp.total_cmp(&truth[b].stamp));
    est.iter()
        .enumerate()
        .map(|(i, p)| {
            let pos = order.partition_point(|&j| truth[j].stamp < p.stamp);
            let best = [pos.checked_sub(1), Some(pos)]
                .into_iter()
                .flatten()
                .filter(|&k| k < order.len())
                .map(|k| order[k])
                .min_by(|&a, &b| (truth[a].stamp - p.stamp).abs().total_cmp(&(truth[b].stamp - p.stamp).abs()))
                .expect("truth is non-empty");
            if (truth[best].stamp - p.stamp).abs() <= max_dt {
                Ok((i, best))
            } else {
                Err(Error::Unassociable { stamp: p.stamp, max_dt })
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AteStats {
    pub rmse: f64,
    pub mean: f64,
    pub median: f64,
    pub max: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpeStats {
    pub translation_rmse: f64,
    pub translation_mean: f64,
    pub translation_max: f64,
    pub rotation_rmse_deg: f64,
    pub rotation_mean_deg: f64,
    pub rotation_max_deg: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub ate: AteStats,
    /// Absent when fewer than two poses could be associated.
    pub rpe: Option<RpeStats>,
}

/// Rigid transform taking estimated positions onto true ones in the least
/// squares sense. Falls back to centroid alignment for fewer than three
/// poses.
pub fn align(est: &[Point3<f64>], truth: &[Point3<f64>]) -> RigidTransform {
    fit_rigid(est, truth).unwrap_or_else(|| {
        let n = est.len().max(1) as f64;
        let ce: Vector3<f64> = est.iter().map(|p| p.coords).sum::<Vector3<f64>>() / n;
        let ct: Vector3<f64> = truth.iter().map(|p| p.coords).sum::<Vector3<f64>>() / n;
        RigidTransform::from_translation(ct - ce)
    })
}

fn summarize(mut errs: Vec<f64>) -> (f64, f64, f64, f64) {
    let n = errs.len() as f64;
    let rmse = (errs.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    let mean = errs.iter().sum::<f64>() / n;
    errs.sort_by(f64::total_cmp);
    let mid = errs.len() / 2;
    let median = if errs.len() % 2 == 1 {
        errs[mid]
    } else {
        (errs[mid - 1] + errs[mid]) / 2.0
    };
    (rmse, mean, median, *errs.last().unwrap())
}

/// Absolute trajectory error of positions after rigid alignment.
pub fn ate(est: &[Pose], truth: &[Pose], max_dt: f64) -> Result<AteStats> {
    let pairs = associate(est, truth, max_dt)?;
    let pe: Vec<Point3<f64>> = pairs.iter().map(|&(i, _)| Point3::from(*est[i].transform.translation())).collect();
    let pt: Vec<Point3<f64>> = pairs.iter().map(|&(_, j)| Point3::from(*truth[j].transform.translation())).collect();
    let a = align(&pe, &pt);
    let errs = pe.iter().zip(&pt).map(|(e, t)| (a.transform_point(e) - t).norm()).collect();
    let (rmse, mean, median, max) = summarize(errs);
    Ok(AteStats {
        rmse,
        mean,
        median,
        max,
        pairs: pairs.len(),
    })
}

/// Relative pose error between consecutive associated poses.
pub fn rpe(est: &[Pose], truth: &[Pose], max_dt: f64) -> Result<Option<RpeStats>> {
    let pairs = associate(est, truth, max_dt)?;
    if pairs.len() < 2 {
        return Ok(None);
    }
    let (mut te, mut re) = (Vec::new(), Vec::new());
    for w in pairs.windows(2) {
        let (i0, j0) = w[0];
        let (i1, j1) = w[1];
        let de = relative_motion(&est[i0].transform, &est[i1].transform);
        let dt = relative_motion(&truth[j0].transform, &truth[j1].transform);
        let (t, r) = pose_error(&de, &dt);
        te.push(t);
        re.push(r.to_degrees());
    }
    let (t_rmse, t_mean, _, t_max) = summarize(te);
    let (r_rmse, r_mean, _, r_max) = summarize(re);
    Ok(Some(RpeStats {
        translation_rmse: t_rmse,
        translation_mean: t_mean,
        translation_max: t_max,
        rotation_rmse_deg: r_rmse,
        rotation_mean_deg: r_mean,
        rotation_max_deg: r_max,
        pairs: pairs.len() - 1,
    }))
}

pub fn evaluate(est: &[Pose], truth: &[Pose], max_dt: f64) -> Result<Metrics> {
    Ok(Metrics {
        ate: ate(est, truth, max_dt)?,
        rpe: rpe(est, truth, max_dt)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn helix(n: usize) -> Vec<Pose> {
        (0..n)
            .map(|k| {
                let t = k as f64 * 0.1;
                Pose::new(
                    t,
                    RigidTransform::from_rotation_vector(
                        &Vector3::new(0.0, 0.0, t),
                        Vector3::new(2.0 * t.cos(), 2.0 * t.sin(), 0.3 * t),
                    ),
                )
            })
            .collect()
    }

    #[test]
    fn self_comparison_is_zero() {
        let tr = helix(50);
        let m = evaluate(&tr, &tr, DEFAULT_MAX_DT).unwrap();
        assert!(m.ate.rmse < 1e-12);
        assert!(m.rpe.unwrap().translation_rmse < 1e-12);
    }

    #[test]
    fn rigidly_moved_copy_aligns_to_zero() {
        let tr = helix(50);
        let g = RigidTransform::from_rotation_vector(&Vector3::new(0.3, -1.0, 2.0), Vector3::new(5.0, -3.0, 1.0));
        let moved: Vec<Pose> = tr.iter().map(|p| Pose::new(p.stamp, g.compose(&p.transform))).collect();
        let m = evaluate(&moved, &tr, DEFAULT_MAX_DT).unwrap();
        assert!(m.ate.rmse < 1e-9, "{}", m.ate.rmse);
        assert!(m.rpe.unwrap().rotation_rmse_deg < 1e-9);
    }

    /// Per-axis N(0, σ²) noise gives a position error whose RMS is σ·√3.
    #[test]
    fn white_noise_statistic() {
        let tr = helix(2000);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = Normal::new(0.0, 0.01).unwrap();
        let noisy: Vec<Pose> = tr
            .iter()
            .map(|p| {
                let d = Vector3::from_fn(|_, _| n.sample(&mut rng));
                Pose::new(p.stamp, RigidTransform::new(*p.transform.rotation(), p.transform.translation() + d))
            })
            .collect();
        let a = ate(&noisy, &tr, DEFAULT_MAX_DT).unwrap();
        let expected = 0.01 * 3f64.sqrt();
        assert!((a.rmse / expected - 1.0).abs() < 0.15, "{}", a.rmse);
    }

    #[test]
    fn stamps_must_associate() {
        let tr = helix(10);
        let late: Vec<Pose> = tr.iter().map(|p| Pose::new(p.stamp + 0.2, p.transform)).collect();
        assert!(matches!(ate(&late, &tr, DEFAULT_MAX_DT), Err(Error::Unassociable { .. })));
        let jitter: Vec<Pose> = tr.iter().map(|p| Pose::new(p.stamp + 0.04, p.transform)).collect();
        assert_eq!(associate(&jitter, &tr, DEFAULT_MAX_DT).unwrap()[3], (3, 3));
    }

    #[test]
    fn short_trajectories() {
        let tr = helix(2);
        let shifted: Vec<Pose> = tr
            .iter()
            .map(|p| Pose::new(p.stamp, RigidTransform::from_translation(Vector3::x()).compose(&p.transform)))
            .collect();
        assert!(ate(&shifted, &tr, DEFAULT_MAX_DT).unwrap().rmse < 1e-12);
        assert!(rpe(&tr[..1], &tr, DEFAULT_MAX_DT).unwrap().is_none());
    }
}
