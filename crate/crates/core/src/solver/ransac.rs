use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::correspondence::CorrespondenceSet;
use crate::geometry::{fit_rigid, RigidTransform};

/// If the best hypothesis would discard more than this fraction of the
/// pairs, rejection is abandoned and the input returned unchanged.
pub const MAX_REJECTED_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub kept: CorrespondenceSet,
    pub removed: usize,
    /// Set when the consensus was too weak and nothing was removed.
    pub fell_back: bool,
}

/// RANSAC over rigid transforms fitted to random 3-pair samples. Pairs
/// farther than `threshold` (meters) from their target under the best
/// hypothesis are removed.
pub fn reject_outliers(set: &CorrespondenceSet, threshold: f64, iterations: usize, seed: u64) -> Rejection {
    let unchanged = |fell_back| Rejection {
        kept: set.clone(),
        removed: 0,
        fell_back,
    };
    let n = set.len();
    if n <= 3 {
        return unchanged(false);
    }
    let src: Vec<_> = set.pairs.iter().map(|c| c.source_point).collect();
    let dst: Vec<_> = set.pairs.iter().map(|c| c.target_point).collect();
    let t2 = threshold * threshold;
    let inliers_of = |t: &RigidTransform| -> Vec<bool> {
        src.iter()
            .zip(&dst)
            .map(|(s, d)| (t.transform_point(s) - d).norm_squared() <= t2)
            .collect()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(usize, Vec<bool>)> = None;
    for _ in 0..iterations {
        let a = rng.random_range(0..n);
        let mut b = rng.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        let mut c = rng.random_range(0..n - 2);
        for taken in [a.min(b), a.max(b)] {
            if c >= taken {
                c += 1;
            }
        }
        let (pa, pb, pc) = (src[a], src[b], src[c]);
        // collinear minimal samples do not fix a rotation
        let area2 = (pb - pa).cross(&(pc - pa)).norm_squared();
        let scale2 = (pb - pa).norm_squared().max((pc - pa).norm_squared());
        if !(area2 > 1e-6 * scale2 * scale2) {
            continue;
        }
        let Some(t) = fit_rigid(&[pa, pb, pc], &[dst[a], dst[b], dst[c]]) else {
            continue;
        };
        let mask = inliers_of(&t);
        let count = mask.iter().filter(|&&m| m).count();
        if best.as_ref().is_none_or(|(bc, _)| count > *bc) {
            let done = count == n;
            best = Some((count, mask));
            if done {
                break;
            }
        }
    }

    let Some((count, mask)) = best else {
        return unchanged(true);
    };
    let removed = n - count;
    if removed as f64 > MAX_REJECTED_FRACTION * n as f64 {
        return unchanged(true);
    }
    let pairs = set
        .pairs
        .iter()
        .zip(&mask)
        .filter(|(_, &m)| m)
        .map(|(c, _)| *c)
        .collect();
    Rejection {
        kept: CorrespondenceSet { pairs },
        removed,
        fell_back: false,
    }
}
