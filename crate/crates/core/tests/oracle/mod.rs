//! Independent reference implementations used only by the tests.
#![allow(dead_code)]

use lowrank_ncvx::{Mat, Rng, Vector};

/// Cyclic Jacobi eigendecomposition, eigenvalues descending.
pub fn jacobi_eigen(m: &Mat) -> (Vec<f64>, Mat) {
    let n = m.nrows();
    let mut a = (m + m.transpose()) * 0.5;
    let mut v = Mat::identity(n, n);
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| a[(i, j)].powi(2)).sum();
        if off < 1e-30 * a.norm_squared().max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let vals = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vecs = Mat::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &v.column(i));
    }
    (vals, vecs)
}

/// Singular values and vectors from the eigendecomposition of MᵀM. Left
/// vectors are only meaningful for nonzero singular values.
pub fn svd_via_gram(m: &Mat) -> (Vec<f64>, Mat, Mat) {
    let (vals, v) = jacobi_eigen(&(m.transpose() * m));
    let s: Vec<f64> = vals.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let mut u = Mat::zeros(m.nrows(), s.len());
    for k in 0..s.len() {
        if s[k] > 1e-12 * s[0].max(1e-300) {
            u.set_column(k, &(m * v.column(k) / s[k]));
        }
    }
    (s, u, v)
}

/// Wigner-type symmetric matrix with N(0,1) entries.
pub fn random_symmetric(n: usize, rng: &mut Rng) -> Mat {
    let g = rng.gaussian_matrix(n, n);
    (&g + g.transpose()) * std::f64::consts::FRAC_1_SQRT_2
}

/// Modified Gram-Schmidt on the columns.
pub fn gram_schmidt(mut a: Mat) -> Mat {
    for j in 0..a.ncols() {
        for k in 0..j {
            let d = a.column(k).dot(&a.column(j));
            let ck = a.column(k).into_owned();
            a.column_mut(j).axpy(-d, &ck, 1.0);
        }
        let nj = a.column(j).norm();
        a.column_mut(j).scale_mut(1.0 / nj);
    }
    a
}

pub fn random_orthonormal_cols(n: usize, r: usize, rng: &mut Rng) -> Mat {
    gram_schmidt(rng.gaussian_matrix(n, r))
}

/// Haar-like orthogonal matrix, reflections included.
pub fn random_orthonormal(n: usize, rng: &mut Rng) -> Mat {
    random_orthonormal_cols(n, n, rng)
}

/// Central difference of a scalar function along every coordinate.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let xi = xp[i];
            xp[i] = xi + h;
            let fp = f(&xp);
            xp[i] = xi - h;
            let fm = f(&xp);
            xp[i] = xi;
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt().max(1e-300);
    num / den
}

pub fn vec_of(v: &[f64]) -> Vector {
    Vector::from_column_slice(v)
}
