//! Distances modulo the global ambiguities of each model.

use nalgebra::{ComplexField, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::linalg::{is_orthonormal, svd, top_r_svd_robust, CMat, CVector, Mat, Vector};

/// Orthonormal H minimizing ‖XH − X⋆‖_F, from the SVD of XᵀX⋆.
pub fn procrustes(x: &Mat, xstar: &Mat) -> Result<Mat> {
    if x.shape() != xstar.shape() {
        return Err(Error::Shape(format!("{:?} vs {:?}", x.shape(), xstar.shape())));
    }
    let c = x.transpose() * xstar;
    let d = svd(&c);
    Ok(d.u * d.v.transpose())
}

pub fn dist_factors(x: &Mat, xstar: &Mat) -> Result<f64> {
    let h = procrustes(x, xstar)?;
    Ok((x * h - xstar).norm())
}

/// Procrustes distance on the stacked pair [L; R] against [L⋆; R⋆].
pub fn dist_stacked(l: &Mat, r: &Mat, lstar: &Mat, rstar: &Mat) -> Result<f64> {
    if l.ncols() != r.ncols() {
        return Err(Error::Shape("factor ranks differ".into()));
    }
    let stack = |a: &Mat, b: &Mat| {
        let mut s = Mat::zeros(a.nrows() + b.nrows(), a.ncols());
        s.rows_mut(0, a.nrows()).copy_from(a);
        s.rows_mut(a.nrows(), b.nrows()).copy_from(b);
        s
    };
    dist_factors(&stack(l, r), &stack(lstar, rstar))
}

/// min(‖x − x⋆‖, ‖x + x⋆‖).
pub fn dist_sign(x: &Vector, xstar: &Vector) -> f64 {
    (x - xstar).norm().min((x + xstar).norm())
}

/// min over unit-modulus c of ‖c·x − x⋆‖.
pub fn dist_phase(x: &CVector, xstar: &CVector) -> f64 {
    let inner = x.dotc(xstar);
    let c = if inner.norm() > 0.0 { inner / inner.norm() } else { Complex64::new(1.0, 0.0) };
    (x * c - xstar).norm()
}

/// ‖UUᵀ − U⋆U⋆ᵀ‖ in spectral norm.
pub fn dist_subspace(u: &Mat, ustar: &Mat) -> Result<f64> {
    if u.shape() != ustar.shape() {
        return Err(Error::Shape(format!("{:?} vs {:?}", u.shape(), ustar.shape())));
    }
    if !is_orthonormal(u, 1e-8) || !is_orthonormal(ustar, 1e-8) {
        return invalid("dist_subspace needs orthonormal columns");
    }
    let d = u * u.transpose() - ustar * ustar.transpose();
    let eig = SymmetricEigen::new(d);
    Ok(eig.eigenvalues.iter().fold(0.0, |a: f64, v| a.max(v.abs())).min(1.0))
}

/// Blind-deconvolution distance modulo the scaling h → h/ᾱ, x → αx.
pub fn dist_bd(h: &CVector, x: &CVector, hstar: &CVector, xstar: &CVector) -> Result<f64> {
    if h.len() != hstar.len() || x.len() != xstar.len() {
        return Err(Error::Shape("blind deconvolution vector lengths".into()));
    }
    let nh = h.norm();
    let nx = x.norm();
    if nh == 0.0 || nx == 0.0 {
        return invalid("dist_bd needs nonzero h and x");
    }
    let c1 = hstar.dotc(h);
    let c2 = xstar.dotc(x);
    let consts = hstar.norm_squared() + xstar.norm_squared();
    // After the optimal phase, only the modulus remains.
    let reduced = |log_rho: f64| {
        let rho = log_rho.exp();
        nh * nh / (rho * rho) + rho * rho * nx * nx + consts - 2.0 * (c1 / rho + c2 * rho).norm()
    };
    let rho0 = (hstar.norm() / nh).sqrt();
    let lo = (1e-6 * rho0).ln();
    let hi = (1e6 * rho0).ln();
    let grid = 480;
    let step = (hi - lo) / grid as f64;
    let mut best: usize = 0;
    let mut best_val = f64::INFINITY;
    for k in 0..=grid {
        let v = reduced(lo + step * k as f64);
        if v < best_val {
            best_val = v;
            best = k;
        }
    }
    let mut a = lo + step * (best.saturating_sub(1)) as f64;
    let mut b = lo + step * (best + 1).min(grid) as f64;
    let (grid_a, grid_b) = (a, b);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (reduced(c), reduced(d));
    while (b - a).abs() > 1e-10 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = reduced(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = reduced(d);
        }
    }
    // Polish on the derivative, which has no cancellation near the minimum.
    let slope = |log_rho: f64| {
        let rho = log_rho.exp();
        let z = c1 / rho + c2 * rho;
        let dz = -c1 / (rho * rho) + c2;
        let dabs = if z.norm() > 0.0 { (z.conj() * dz).re / z.norm() } else { 0.0 };
        -2.0 * nh * nh / (rho * rho * rho) + 2.0 * rho * nx * nx - 2.0 * dabs
    };
    let (mut lo_b, mut hi_b) = (grid_a, grid_b);
    if slope(lo_b) < 0.0 && slope(hi_b) > 0.0 {
        for _ in 0..200 {
            let mid = 0.5 * (lo_b + hi_b);
            if slope(mid) < 0.0 {
                lo_b = mid;
            } else {
                hi_b = mid;
            }
            if hi_b - lo_b <= 1e-15 * mid.abs().max(1.0) {
                break;
            }
        }
        a = lo_b;
        b = hi_b;
    }
    let rho = (0.5 * (a + b)).exp();
    let z = c1 / rho + c2 * rho;
    let phase = if z.norm() > 0.0 { z.conj() / z.norm() } else { Complex64::new(1.0, 0.0) };
    // α = ρ·e^{iφ}, h/ᾱ = h·e^{iφ}/ρ
    let e = phase;
    let dh = h * (e / rho) - hstar;
    let dx = x * (e * rho) - xstar;
    Ok((dh.norm_squared() + dx.norm_squared()).sqrt())
}

/// Smallest μ with ‖U‖²_{2,∞} ≤ μr/n1 and ‖V‖²_{2,∞} ≤ μr/n2 for the rank-r SVD of M.
pub fn incoherence_mu(m: &Mat, r: usize) -> Result<f64> {
    let (n1, n2) = m.shape();
    let (left, right) = top_r_svd_robust(m, r, 1e-12)?;
    if left.values[r - 1] <= 1e-10 * left.values[0].max(f64::MIN_POSITIVE) {
        return invalid(format!("rank {r} exceeds numerical rank"));
    }
    let mu_u = row_norm_sq_max(&left.basis) * n1 as f64 / r as f64;
    let mu_v = row_norm_sq_max(&right.basis) * n2 as f64 / r as f64;
    Ok(mu_u.max(mu_v))
}

fn row_norm_sq_max(u: &Mat) -> f64 {
    (0..u.nrows()).map(|i| u.row(i).norm_squared()).fold(0.0, f64::max)
}

/// ‖X‖_{2,∞}: largest row norm.
pub fn two_to_inf(x: &Mat) -> f64 {
    row_norm_sq_max(x).sqrt()
}

/// sqrt(m)·max_j |b_jᴴh| / ‖h‖ where row j of `b` is b_jᴴ.
pub fn bd_incoherence(h: &CVector, b: &CMat) -> Result<f64> {
    if b.ncols() != h.len() {
        return Err(Error::Shape(format!("B has {} columns, h has {}", b.ncols(), h.len())));
    }
    let nh = h.norm();
    if nh == 0.0 {
        return invalid("bd_incoherence needs nonzero h");
    }
    let bh = b * h;
    let peak = bh.iter().fold(0.0, |a: f64, v| a.max(v.modulus()));
    Ok((b.nrows() as f64).sqrt() * peak / nh)
}

/// (xᵀx⋆)² / (‖x‖²‖x⋆‖²).
pub fn cosine_sq(x: &Vector, xstar: &Vector) -> Result<f64> {
    let a = x.norm_squared();
    let b = xstar.norm_squared();
    if a == 0.0 || b == 0.0 {
        return invalid("cosine_sq of a zero vector");
    }
    let d = x.dot(xstar);
    Ok((d * d / (a * b)).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn procrustes_identity() {
        let mut rng = Rng::new(1);
        let x = rng.gaussian_matrix(5, 2);
        let h = procrustes(&x, &x).unwrap();
        assert!((h - Mat::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn procrustes_rotation() {
        let mut rng = Rng::new(2);
        let xs = rng.gaussian_matrix(6, 3);
        let q = crate::linalg::orth(rng.gaussian_matrix(3, 3));
        let x = &xs * &q;
        let h = procrustes(&x, &xs).unwrap();
        assert!((&h - q.transpose()).norm() < 1e-10);
        assert!((x * h - xs).norm() <= 1e-10);
    }

    #[test]
    fn subspace_extremes() {
        let e1 = Mat::from_column_slice(2, 1, &[1.0, 0.0]);
        let e2 = Mat::from_column_slice(2, 1, &[0.0, 1.0]);
        assert!(dist_subspace(&e1, &e1).unwrap().abs() < 1e-15);
        assert!((dist_subspace(&e1, &e2).unwrap() - 1.0).abs() < 1e-15);
        let bad = Mat::from_column_slice(2, 1, &[2.0, 0.0]);
        assert!(dist_subspace(&bad, &e1).is_err());
    }

    #[test]
    fn bd_truth_and_scaling() {
        let mut rng = Rng::new(3);
        let h: CVector = CVector::from_fn(4, |_, _| rng.complex_normal());
        let x: CVector = CVector::from_fn(5, |_, _| rng.complex_normal());
        assert!(dist_bd(&h, &x, &h, &x).unwrap() < 1e-10);
        let c = Complex64::new(0.3, -1.7);
        let hs = &h / c.conj();
        let xs = &x * c;
        assert!(dist_bd(&hs, &xs, &h, &x).unwrap() < 1e-8);
        assert!(dist_bd(&CVector::zeros(4), &x, &h, &x).is_err());
    }

    #[test]
    fn incoherence_extremes() {
        let ones = Mat::from_element(7, 7, 1.0);
        assert!((incoherence_mu(&ones, 1).unwrap() - 1.0).abs() < 1e-10);
        let mut spike = Mat::zeros(7, 7);
        spike[(0, 0)] = 1.0;
        assert!((incoherence_mu(&spike, 1).unwrap() - 7.0).abs() < 1e-10);
        assert!(incoherence_mu(&spike, 2).is_err());
    }

    #[test]
    fn bd_incoherence_flat_and_scaled() {
        let m = 8;
        let b = CMat::from_fn(m, 3, |j, k| {
            let t = -2.0 * std::f64::consts::PI * (j * k) as f64 / m as f64;
            Complex64::new(t.cos(), t.sin()) / (m as f64).sqrt()
        });
        let mut e1 = CVector::zeros(3);
        e1[0] = Complex64::new(1.0, 0.0);
        assert!((bd_incoherence(&e1, &b).unwrap() - 1.0).abs() < 1e-12);
        let h = CVector::from_vec(vec![Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.1), Complex64::new(0.0, 1.0)]);
        let a = bd_incoherence(&h, &b).unwrap();
        let s = bd_incoherence(&(&h * Complex64::new(3.0, -4.0)), &b).unwrap();
        assert!((a - s).abs() < 1e-12);
    }

    #[test]
    fn cosine_basics() {
        let x = Vector::from_vec(vec![1.0, 2.0]);
        assert!((cosine_sq(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        let y = Vector::from_vec(vec![-2.0, 1.0]);
        assert!(cosine_sq(&x, &y).unwrap().abs() < 1e-15);
        assert!(cosine_sq(&x, &Vector::zeros(2)).is_err());
    }
}
