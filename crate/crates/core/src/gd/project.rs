use crate::linalg::{Mat, Vector};

/// Scale each row down to norm at most `bound`.
pub fn clip_rows(x: &mut Mat, bound: f64) {
    for i in 0..x.nrows() {
        let nr = x.row(i).norm();
        if nr > bound {
            x.row_mut(i).scale_mut(bound / nr);
        }
    }
}

/// Row clipping onto {X : ‖X‖_{2,∞} ≤ √(cμr/n)·‖X₀‖}, n = rows of X.
pub fn project_incoherent(x: &Mat, x0_norm: f64, c: f64, mu: f64, r: usize) -> Mat {
    let bound = (c * mu * r as f64 / x.nrows() as f64).sqrt() * x0_norm;
    let mut out = x.clone();
    clip_rows(&mut out, bound);
    out
}

/// Euclidean projection onto the ℓ₁ ball of the given radius.
pub fn project_l1(x: &Vector, radius: f64) -> Vector {
    if x.lp_norm(1) <= radius {
        return x.clone();
    }
    if radius <= 0.0 {
        return Vector::zeros(x.len());
    }
    let mut u: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - radius) / (j + 1) as f64;
        if uj > t {
            theta = t;
        } else {
            break;
        }
    }
    x.map(|v| v.signum() * (v.abs() - theta).max(0.0))
}

/// Best k-term approximation; ties go to the lower index.
pub fn project_sparse_k(x: &Vector, k: usize) -> Vector {
    if k >= x.len() {
        return x.clone();
    }
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b)));
    let mut out = Vector::zeros(x.len());
    for &i in &idx[..k] {
        out[i] = x[i];
    }
    out
}
