//! Dense linear algebra helpers and top-r subspace extraction.

use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::rng::Rng;

pub type Mat = DMatrix<f64>;
pub type CMat = DMatrix<Complex64>;
pub type Vector = DVector<f64>;
pub type CVector = DVector<Complex64>;

/// Real or complex double precision scalar.
pub trait Scalar: ComplexField<RealField = f64> + Copy {
    fn from_gaussian(rng: &mut Rng) -> Self;
}

impl Scalar for f64 {
    fn from_gaussian(rng: &mut Rng) -> Self {
        rng.normal()
    }
}

impl Scalar for Complex64 {
    fn from_gaussian(rng: &mut Rng) -> Self {
        rng.complex_normal()
    }
}

/// Orthonormal basis with its leading eigen or singular values.
#[derive(Debug, Clone)]
pub struct SubspaceEstimate<T: Scalar> {
    pub basis: DMatrix<T>,
    /// Descending.
    pub values: Vec<f64>,
    /// `values[r-1]` minus the (r+1)-th value (Ritz estimate), or minus 0 when r is full.
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct SubspaceOpts<T: Scalar> {
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub warm_start: Option<DMatrix<T>>,
}

impl<T: Scalar> Default for SubspaceOpts<T> {
    fn default() -> Self {
        SubspaceOpts { tol: 1e-10, max_iters: 3000, seed: 0x5eed_0001, warm_start: None }
    }
}

impl<T: Scalar> SubspaceOpts<T> {
    pub fn with_tol(tol: f64) -> Self {
        SubspaceOpts { tol, ..Default::default() }
    }
}

pub fn check_finite<T: Scalar>(m: &DMatrix<T>, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        invalid(format!("{what} has non-finite entries"))
    }
}

/// Largest absolute entry.
pub fn max_abs<T: Scalar>(m: &DMatrix<T>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.modulus()))
}

pub fn is_hermitian<T: Scalar>(m: &DMatrix<T>, tol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let scale = max_abs(m).max(1.0);
    let n = m.nrows();
    for j in 0..n {
        for i in 0..=j {
            if (m[(i, j)] - m[(j, i)].conjugate()).modulus() > tol * scale {
                return false;
            }
        }
    }
    true
}

/// Thin QR orthonormalization of the columns.
pub fn orth<T: Scalar>(m: DMatrix<T>) -> DMatrix<T> {
    m.qr().q()
}

pub fn hermitian_part<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    let half = T::from_real(0.5);
    (m + m.adjoint()) * half
}


/// Thin SVD: `u` is p×k, `v` is q×k with k = min(p, q), `s` descending.
#[derive(Debug, Clone)]
pub struct Svd<T: Scalar> {
    pub u: DMatrix<T>,
    pub s: Vec<f64>,
    pub v: DMatrix<T>,
}

/// One-sided Jacobi SVD.
pub fn svd<T: Scalar>(m: &DMatrix<T>) -> Svd<T> {
    let (p, q) = m.shape();
    if p < q {
        let t = svd(&m.adjoint());
        return Svd { u: t.v, s: t.s, v: t.u };
    }
    let mut a = m.clone();
    let mut v = DMatrix::<T>::identity(q, q);
    for _sweep in 0..80 {
        let mut off = 0.0f64;
        for i in 0..q {
            for j in i + 1..q {
                let alpha = a.column(i).norm_squared();
                let beta = a.column(j).norm_squared();
                let gamma = a.column(i).dotc(&a.column(j));
                let g = gamma.modulus();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                off = off.max(g / (alpha * beta).sqrt());
                // Rotate the phase out of the pair so the inner product is real.
                let ph = gamma / T::from_real(g);
                let phc = ph.conjugate();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                let (tc, ts) = (T::from_real(c), T::from_real(sn));
                for k in 0..p {
                    let ai = a[(k, i)];
                    let aj = a[(k, j)] * phc;
                    a[(k, i)] = ai * tc - aj * ts;
                    a[(k, j)] = ai * ts + aj * tc;
                }
                for k in 0..q {
                    let vi = v[(k, i)];
                    let vj = v[(k, j)] * phc;
                    v[(k, i)] = vi * tc - vj * ts;
                    v[(k, j)] = vi * ts + vj * tc;
                }
            }
        }
        if off <= 4.0 * f64::EPSILON {
            break;
        }
    }
    let norms: Vec<f64> = (0..q).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let top = norms.get(order[0]).copied().unwrap_or(0.0);
    let mut u = DMatrix::<T>::zeros(p, q);
    let mut vs = DMatrix::<T>::zeros(q, q);
    let mut s = Vec::with_capacity(q);
    let mut filled = Vec::new();
    for (c, &j) in order.iter().enumerate() {
        let sj = norms[j];
        vs.set_column(c, &v.column(j));
        if sj > top * 1e-300 && sj > 0.0 {
            u.set_column(c, &(a.column(j) / T::from_real(sj)));
            filled.push(c);
        }
        s.push(sj);
    }
    // Complete U on numerically zero singular values.
    if filled.len() < q {
        let mut e = 0;
        for c in 0..q {
            if filled.contains(&c) {
                continue;
            }
            loop {
                let mut cand = DVector::<T>::zeros(p);
                cand[e % p] = T::one();
                e += 1;
                for &f in &filled {
                    let proj = u.column(f).dotc(&cand);
                    cand -= u.column(f) * proj;
                }
                for &f in &filled {
                    let proj = u.column(f).dotc(&cand);
                    cand -= u.column(f) * proj;
                }
                let nc = cand.norm();
                if nc > 1e-8 {
                    u.set_column(c, &(cand / T::from_real(nc)));
                    filled.push(c);
                    break;
                }
                if e > 4 * p {
                    break;
                }
            }
        }
    }
    Svd { u, s, v: vs }
}

/// Spectral norm by dense SVD.
pub fn spectral_norm<T: Scalar>(m: &DMatrix<T>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    svd(m).s[0]
}

/// Columns are orthonormal within `tol` (entrywise on the Gram matrix).
pub fn is_orthonormal<T: Scalar>(u: &DMatrix<T>, tol: f64) -> bool {
    let g = u.adjoint() * u;
    let k = g.nrows();
    for j in 0..k {
        for i in 0..k {
            let target = if i == j { T::one() } else { T::zero() };
            if (g[(i, j)] - target).modulus() > tol {
                return false;
            }
        }
    }
    true
}

fn random_block<T: Scalar>(rows: usize, cols: usize, rng: &mut Rng) -> DMatrix<T> {
    DMatrix::from_fn(rows, cols, |_, _| T::from_gaussian(rng))
}

fn start_basis<T: Scalar>(n: usize, b: usize, opts: &SubspaceOpts<T>) -> DMatrix<T> {
    let mut rng = Rng::new(opts.seed);
    let mut q = random_block::<T>(n, b, &mut rng);
    if let Some(w) = &opts.warm_start {
        if w.nrows() == n {
            let k = w.ncols().min(b);
            q.columns_mut(0, k).copy_from(&w.columns(0, k));
        }
    }
    orth(q)
}

/// Dominant |eigenvalue| estimate by power iteration.
fn power_estimate<T: Scalar>(apply: impl Fn(&DVector<T>) -> DVector<T>, n: usize, iters: usize, seed: u64) -> f64 {
    let mut rng = Rng::new(seed);
    let mut v: DVector<T> = DVector::from_fn(n, |_, _| T::from_gaussian(&mut rng));
    v /= T::from_real(v.norm());
    let mut est = 0.0;
    for _ in 0..iters {
        let w = apply(&v);
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        est = nw;
        v = w / T::from_real(nw);
    }
    est
}

fn sorted_dense_eigen<T: Scalar>(m: &DMatrix<T>) -> (Vec<f64>, DMatrix<T>) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::<T>::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// All eigenpairs of a Hermitian matrix, descending.
pub fn dense_eigen<T: Scalar>(m: &DMatrix<T>) -> (Vec<f64>, DMatrix<T>) {
    sorted_dense_eigen(m)
}

/// Top-r eigenpairs from a full dense eigendecomposition.
pub fn dense_top_r_symmetric<T: Scalar>(m: &DMatrix<T>, r: usize) -> Result<SubspaceEstimate<T>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Shape(format!("{}x{} is not square", n, m.ncols())));
    }
    if r == 0 || r > n {
        return invalid(format!("rank {r} out of range for n = {n}"));
    }
    check_finite(m, "matrix")?;
    let (vals, vecs) = sorted_dense_eigen(m);
    let next = if r < n { vals[r] } else { 0.0 };
    Ok(SubspaceEstimate { basis: vecs.columns(0, r).into_owned(), values: vals[..r].to_vec(), gap: vals[r - 1] - next })
}

/// Leading r eigenpairs (algebraic order) of a real symmetric or complex
/// Hermitian matrix by shifted blocked subspace iteration with Rayleigh-Ritz.
pub fn top_r_symmetric<T: Scalar>(m: &DMatrix<T>, r: usize, tol: f64) -> Result<SubspaceEstimate<T>> {
    top_r_symmetric_with(m, r, &SubspaceOpts::with_tol(tol))
}

pub fn top_r_symmetric_with<T: Scalar>(
    m: &DMatrix<T>,
    r: usize,
    opts: &SubspaceOpts<T>,
) -> Result<SubspaceEstimate<T>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Shape(format!("{}x{} is not square", n, m.ncols())));
    }
    if r == 0 || r >= n {
        return invalid(format!("need 1 <= r < n, got r = {r}, n = {n}"));
    }
    check_finite(m, "matrix")?;
    if !is_hermitian(m, 1e-10) {
        return invalid("matrix is not symmetric");
    }
    let b = n.min(r + r.max(8));
    if b == n {
        return dense_top_r_symmetric(m, r);
    }

    let norm_est = power_estimate(|v| m * v, n, 40, opts.seed ^ 0xa5a5);
    if norm_est == 0.0 {
        let mut basis = DMatrix::<T>::zeros(n, r);
        for i in 0..r {
            basis[(i, i)] = T::one();
        }
        return Ok(SubspaceEstimate { basis, values: vec![0.0; r], gap: 0.0 });
    }
    let nu = T::from_real(norm_est);
    let top_of_flip = power_estimate(|v| v * nu - m * v, n, 40, opts.seed ^ 0x5a5a);
    let lam_min = norm_est - top_of_flip;
    let shift = if lam_min < 0.0 { -lam_min * 1.05 } else { 0.0 };
    let s = T::from_real(shift);

    let mut q = start_basis(n, b, opts);
    let mut residual = f64::INFINITY;
    let check_every = 4;
    for it in 1..=opts.max_iters {
        let z = m * &q + &q * s;
        q = orth(z);
        if it % check_every != 0 && it != opts.max_iters {
            continue;
        }
        let h = hermitian_part(&(q.adjoint() * m * &q));
        let (theta, w) = sorted_dense_eigen(&h);
        q = &q * w;
        let scale = norm_est.max(theta.iter().fold(0.0, |a: f64, t| a.max(t.abs())));
        let mq = m * q.columns(0, r);
        residual = 0.0;
        for i in 0..r {
            let res = (mq.column(i) - q.column(i) * T::from_real(theta[i])).norm();
            residual = residual.max(res / scale);
        }
        if residual <= tol_or_floor(opts.tol) {
            return Ok(SubspaceEstimate {
                basis: q.columns(0, r).into_owned(),
                values: theta[..r].to_vec(),
                gap: theta[r - 1] - theta[r],
            });
        }
    }
    Err(Error::NotConverged { iters: opts.max_iters, residual })
}

fn tol_or_floor(tol: f64) -> f64 {
    tol.max(1e-14)
}

/// Leading r eigenpairs, falling back to a dense solve when iteration stalls.
/// Also accepts r = n.
pub fn top_r_symmetric_robust<T: Scalar>(m: &DMatrix<T>, r: usize, tol: f64) -> Result<SubspaceEstimate<T>> {
    if r > 0 && r == m.nrows() && m.is_square() {
        check_finite(m, "matrix")?;
        if !is_hermitian(m, 1e-10) {
            return invalid("matrix is not symmetric");
        }
        return dense_top_r_symmetric(m, r);
    }
    match top_r_symmetric(m, r, tol) {
        Err(Error::NotConverged { .. }) => dense_top_r_symmetric(m, r),
        other => other,
    }
}

fn top_r_svd_dense<T: Scalar>(m: &DMatrix<T>, r: usize) -> (SubspaceEstimate<T>, SubspaceEstimate<T>) {
    let d = svd(m);
    let k = d.s.len();
    let next = if r < k { d.s[r] } else { 0.0 };
    let gap = d.s[r - 1] - next;
    let values = d.s[..r].to_vec();
    (
        SubspaceEstimate { basis: d.u.columns(0, r).into_owned(), values: values.clone(), gap },
        SubspaceEstimate { basis: d.v.columns(0, r).into_owned(), values, gap },
    )
}

/// Leading r singular triples by alternating block iteration with
/// Rayleigh-Ritz on the small projected matrix.
pub fn top_r_svd<T: Scalar>(m: &DMatrix<T>, r: usize, tol: f64) -> Result<(SubspaceEstimate<T>, SubspaceEstimate<T>)> {
    top_r_svd_with(m, r, &SubspaceOpts::with_tol(tol))
}

pub fn top_r_svd_with<T: Scalar>(
    m: &DMatrix<T>,
    r: usize,
    opts: &SubspaceOpts<T>,
) -> Result<(SubspaceEstimate<T>, SubspaceEstimate<T>)> {
    let (p, q_dim) = m.shape();
    let k = p.min(q_dim);
    if r == 0 || r > k {
        return invalid(format!("need 1 <= r <= {k}, got {r}"));
    }
    check_finite(m, "matrix")?;
    let b = k.min(r + r.max(8));
    if b == k {
        return Ok(top_r_svd_dense(m, r));
    }
    let norm_est = power_estimate(|v| m.adjoint() * (m * v), q_dim, 40, opts.seed ^ 0xa5a5).sqrt();
    if norm_est == 0.0 {
        return Ok(top_r_svd_dense(m, r));
    }
    let mut v = start_basis(q_dim, b, opts);
    let mut residual = f64::INFINITY;
    let mh = m.adjoint();
    for it in 1..=opts.max_iters {
        let u = orth(m * &v);
        v = orth(&mh * &u);
        if it % 2 != 0 && it != opts.max_iters {
            continue;
        }
        let u = orth(m * &v);
        let small = u.adjoint() * m * &v;
        let d = svd(&small);
        let uu = &u * &d.u;
        let vv = &v * &d.v;
        let vals = d.s;
        let scale = norm_est.max(vals[0]);
        residual = 0.0;
        for i in 0..r {
            let s = T::from_real(vals[i]);
            let r1 = (m * vv.column(i) - uu.column(i) * s).norm();
            let r2 = (&mh * uu.column(i) - vv.column(i) * s).norm();
            residual = residual.max(r1.max(r2) / scale);
        }
        v = vv.clone();
        if residual <= tol_or_floor(opts.tol) {
            let gap = vals[r - 1] - vals[r];
            let values = vals[..r].to_vec();
            return Ok((
                SubspaceEstimate { basis: uu.columns(0, r).into_owned(), values: values.clone(), gap },
                SubspaceEstimate { basis: vv.columns(0, r).into_owned(), values, gap },
            ));
        }
    }
    Err(Error::NotConverged { iters: opts.max_iters, residual })
}

/// Top-r SVD, falling back to a dense solve when iteration stalls.
pub fn top_r_svd_robust<T: Scalar>(m: &DMatrix<T>, r: usize, tol: f64) -> Result<(SubspaceEstimate<T>, SubspaceEstimate<T>)> {
    match top_r_svd(m, r, tol) {
        Err(Error::NotConverged { .. }) => Ok(top_r_svd_dense(m, r)),
        other => other,
    }
}

/// Reshape a column-major vector into a matrix.
pub fn unvec(v: &[f64], rows: usize, cols: usize) -> Mat {
    Mat::from_column_slice(rows, cols, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_top_one() {
        let m = Mat::from_diagonal(&Vector::from_vec(vec![3.0, 2.0, 1.0]));
        let est = top_r_symmetric(&m, 1, 1e-12).unwrap();
        assert!((est.values[0] - 3.0).abs() < 1e-12);
        assert!((est.gap - 1.0).abs() < 1e-12);
        assert!((est.basis[(0, 0)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_degenerate() {
        let m = Mat::identity(3, 3);
        let est = top_r_symmetric(&m, 2, 1e-12).unwrap();
        assert_eq!(est.values.len(), 2);
        assert!((est.values[0] - 1.0).abs() < 1e-12 && (est.values[1] - 1.0).abs() < 1e-12);
        assert!(est.gap.abs() < 1e-12);
        assert!(is_orthonormal(&est.basis, 1e-10));
    }

    #[test]
    fn padded_diag_svd() {
        let mut m = Mat::zeros(3, 2);
        m[(0, 0)] = 2.0;
        m[(1, 1)] = 1.0;
        let (l, r) = top_r_svd(&m, 1, 1e-12).unwrap();
        assert!((l.values[0] - 2.0).abs() < 1e-12);
        assert_eq!(l.values, r.values);
    }

    #[test]
    fn rank_one_svd_exact() {
        let u = Vector::from_vec(vec![0.6, 0.8, 0.0]);
        let v = Vector::from_vec(vec![0.0, 1.0]);
        let m = &u * v.transpose();
        let (l, r) = top_r_svd(&m, 1, 1e-12).unwrap();
        let su = l.basis.column(0).dot(&u).signum();
        let sv = r.basis.column(0).dot(&v).signum();
        assert!(su * sv > 0.0);
        assert!((l.basis.column(0) * su - &u).norm() < 1e-14);
        assert!((r.basis.column(0) * sv - &v).norm() < 1e-14);
    }

    #[test]
    fn rejects_asymmetric() {
        let mut m = Mat::identity(20, 20);
        m[(0, 1)] = 1.0;
        assert!(top_r_symmetric(&m, 1, 1e-10).is_err());
    }

    #[test]
    fn zero_matrix_ok() {
        let m = Mat::zeros(30, 30);
        let est = top_r_symmetric(&m, 2, 1e-10).unwrap();
        assert_eq!(est.values, vec![0.0, 0.0]);
    }
}
