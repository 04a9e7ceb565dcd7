//! Self-adjoint eigendecomposition of 6×6 matrices by cyclic Jacobi
//! rotations. Jacobi keeps small eigenvalues accurate relative to the
//! largest one, which matters for condition-number tests near degeneracy.

use nalgebra::{Matrix6, Vector6};

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 64;

/// Eigenvalues (descending) and matching unit eigenvectors (as columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Eigen6 {
    pub values: Vector6<f64>,
    pub vectors: Matrix6<f64>,
}

impl Eigen6 {
    pub fn vector(&self, j: usize) -> Vector6<f64> {
        self.vectors.column(j).into()
    }
}

/// Largest absolute difference between `m` and its transpose.
pub fn asymmetry(m: &Matrix6<f64>) -> f64 {
    (m - m.transpose()).amax()
}

pub fn eigen_sym6(m: &Matrix6<f64>) -> Result<Eigen6> {
    let asym = asymmetry(m);
    if !(asym <= 1e-9 * m.amax().max(1.0)) {
        return Err(Error::NotSymmetric(asym));
    }
    let mut a = (m + m.transpose()) * 0.5;
    let mut v = Matrix6::<f64>::identity();

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..6)
            .flat_map(|i| (0..6).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        let diag: f64 = (0..6).map(|i| a[(i, i)] * a[(i, i)]).sum();
        if off <= f64::EPSILON * f64::EPSILON * diag || off == 0.0 {
            break;
        }
        for p in 0..5 {
            for q in (p + 1)..6 {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..6 {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..6 {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..6 {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = Vector6::from_iterator(order.iter().map(|&i| a[(i, i)]));
    let mut vectors = Matrix6::zeros();
    for (dst, &src) in order.iter().enumerate() {
        let col = v.column(src).normalize();
        vectors.set_column(dst, &col);
    }
    Ok(Eigen6 { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_orthonormal(rng: &mut impl Rng) -> Matrix6<f64> {
        let m = Matrix6::from_fn(|_, _| rng.random_range(-1.0..1.0));
        m.qr().q()
    }

    #[test]
    fn identity_and_diagonal() {
        let e = eigen_sym6(&Matrix6::identity()).unwrap();
        assert_eq!(e.values, Vector6::repeat(1.0));
        let d = Matrix6::from_diagonal(&Vector6::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0));
        let e = eigen_sym6(&d).unwrap();
        assert_eq!(e.values, Vector6::new(6.0, 5.0, 4.0, 3.0, 2.0, 1.0));
        for j in 0..6 {
            assert_eq!(e.vector(j)[5 - j].abs(), 1.0);
        }
    }

    #[test]
    fn rejects_asymmetric() {
        let mut m = Matrix6::identity();
        m[(0, 1)] = 1e-3;
        assert!(matches!(eigen_sym6(&m), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn recovers_constructed_spectrum() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let q = random_orthonormal(&mut rng);
            let mut lambda: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..10.0)).collect();
            lambda.sort_by(|a, b| b.total_cmp(a));
            let l = Vector6::from_vec(lambda);
            let c = q * Matrix6::from_diagonal(&l) * q.transpose();
            let c = (c + c.transpose()) * 0.5;
            let e = eigen_sym6(&c).unwrap();
            assert!((e.values - l).amax() < 1e-8);
            let recon = e.vectors * Matrix6::from_diagonal(&e.values) * e.vectors.transpose();
            assert!((c - recon).norm() <= 1e-8 * c.norm());
            assert!((e.vectors.transpose() * e.vectors - Matrix6::identity()).amax() < 1e-8);
        }
    }
}
