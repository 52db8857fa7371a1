use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{dense_eigen, is_hermitian, spectral_norm, Mat, Vector};

/// Relative tolerance on λ₁ − λ₂ and on negative eigenvalues of M.
pub const GAP_TOL: f64 = 1e-10;
/// |λ_min(∇²f)| below CLASSIFY_TOL·‖M‖ is labelled degenerate.
pub const CLASSIFY_TOL: f64 = 1e-8;

/// (xxᵀ − M)x.
pub fn rank1_gradient(m: &Mat, x: &Vector) -> Vector {
    x * x.dot(x) - m * x
}

/// ‖x‖²I + 2xxᵀ − M.
pub fn rank1_hessian(m: &Mat, x: &Vector) -> Mat {
    let n = x.len();
    let mut h = x * x.transpose() * 2.0 - m;
    let s = x.norm_squared();
    for i in 0..n {
        h[(i, i)] += s;
    }
    // exact symmetry even if M carries rounding asymmetry
    (&h + h.transpose()) * 0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalKind {
    GlobalMin,
    LocalMax,
    StrictSaddle,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub location: Vec<f64>,
    pub kind: CriticalKind,
    pub grad_norm: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

/// Label from the extreme Hessian eigenvalues. Local minima of the rank-1
/// objective are global, so a positive definite Hessian reads as global_min.
pub fn classify_by_curvature(lambda_min: f64, lambda_max: f64, tol: f64) -> CriticalKind {
    if lambda_min.abs() < tol {
        CriticalKind::Degenerate
    } else if lambda_min > 0.0 {
        CriticalKind::GlobalMin
    } else if lambda_max < -tol {
        CriticalKind::LocalMax
    } else {
        CriticalKind::StrictSaddle
    }
}

/// All critical points of ¼‖xxᵀ − M‖²: the origin and ±√λ_k u_k. Points with
/// λ_k = 0 coincide with the origin and are listed once.
pub fn classify_rank1_criticals(m: &Mat) -> Result<Vec<CriticalPoint>> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(Error::Shape(format!("need a square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    let scale = spectral_norm(m).max(f64::MIN_POSITIVE);
    if !is_hermitian(m, 1e-12 * scale) {
        return invalid("M must be symmetric");
    }
    let (vals, vecs) = dense_eigen(m);
    if vals[n - 1] < -GAP_TOL * scale {
        return invalid(format!("M is not PSD: λ_min = {:e}", vals[n - 1]));
    }
    if n > 1 && vals[0] - vals[1] <= GAP_TOL * scale {
        return invalid(format!("eigengap λ₁ − λ₂ = {:e} too small", vals[0] - vals[1]));
    }
    let mut locs = vec![Vector::zeros(n)];
    for (k, &lam) in vals.iter().enumerate() {
        if lam > GAP_TOL * scale {
            let v = vecs.column(k) * lam.sqrt();
            locs.push(v.clone());
            locs.push(-v);
        }
    }
    let tol = CLASSIFY_TOL * scale;
    Ok(locs
        .into_iter()
        .map(|x| {
            let (hv, _) = dense_eigen(&rank1_hessian(m, &x));
            let (lambda_min, lambda_max) = (hv[n - 1], hv[0]);
            CriticalPoint {
                grad_norm: rank1_gradient(m, &x).norm(),
                kind: classify_by_curvature(lambda_min, lambda_max, tol),
                location: x.as_slice().to_vec(),
                lambda_min,
                lambda_max,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hessian_at_origin_is_minus_m() {
        let m = Mat::from_row_slice(2, 2, &[1.0, -0.5, -0.5, 1.0]);
        assert_eq!(rank1_hessian(&m, &Vector::zeros(2)), -m);
    }

    #[test]
    fn repeated_top_eigenvalue_rejected() {
        assert!(classify_rank1_criticals(&Mat::identity(2, 2)).is_err());
    }
}
