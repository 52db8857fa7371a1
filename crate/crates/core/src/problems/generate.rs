use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::*;
use crate::error::invalid;
use crate::linalg::{orth, svd};
use crate::rng::Rng;

/// Singular-value profile of a generated low-rank truth.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spectrum {
    /// Product of i.i.d. Gaussian factors.
    #[default]
    Gaussian,
    /// Random orthonormal singular vectors with these singular values.
    Profile(Vec<f64>),
}

fn check_dims(n1: usize, n2: usize, r: usize) -> Result<()> {
    if n1 == 0 || n2 == 0 {
        return invalid("dimensions must be positive");
    }
    if r == 0 || r > n1.min(n2) {
        return invalid(format!("rank {r} must be in 1..={}", n1.min(n2)));
    }
    Ok(())
}

/// Balanced rank-r truth. Symmetric truths are PSD with L = R.
pub fn low_rank_truth(n1: usize, n2: usize, r: usize, symmetric: bool, spectrum: &Spectrum, rng: &mut Rng) -> Result<LowRankTruth> {
    check_dims(n1, n2, r)?;
    if symmetric && n1 != n2 {
        return invalid("symmetric truth needs n1 == n2");
    }
    let (u, v, s): (Mat, Mat, Vec<f64>) = match spectrum {
        Spectrum::Profile(sv) => {
            if sv.len() != r || sv.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return invalid("spectrum profile needs r positive finite values");
            }
            let mut sv = sv.clone();
            sv.sort_by(|a, b| b.total_cmp(a));
            let u = orth(rng.gaussian_matrix(n1, r));
            let v = if symmetric { u.clone() } else { orth(rng.gaussian_matrix(n2, r)) };
            (u, v, sv)
        }
        Spectrum::Gaussian => {
            let g1 = rng.gaussian_matrix(n1, r);
            let g2 = if symmetric { g1.clone() } else { rng.gaussian_matrix(n2, r) };
            let q1 = g1.clone().qr();
            let q2 = g2.clone().qr();
            let core = q1.r() * q2.r().transpose();
            let d = svd(&core);
            let qa = q1.q();
            let qb = q2.q();
            let u = qa * &d.u;
            let mut v = qb * &d.v;
            if symmetric {
                v = u.clone();
            }
            (u, v, d.s)
        }
    };
    let root = Mat::from_diagonal(&Vector::from_iterator(r, s.iter().map(|x| x.sqrt())));
    let l = &u * &root;
    let rr = &v * &root;
    let m_star = &l * rr.transpose();
    Ok(LowRankTruth { m_star, l, r: rr, sigma: s })
}

pub fn sensing_forward(a: &Mat, m: &Mat) -> Vector {
    let v = Vector::from_column_slice(m.as_slice());
    a.tr_mul(&v)
}

pub fn pr_forward(a: &Mat, x: &Vector) -> Vector {
    (a * x).map(|v| v * v)
}

pub fn qs_forward(a: &Mat, x: &Mat) -> Vector {
    let ax = a * x;
    Vector::from_iterator(ax.nrows(), (0..ax.nrows()).map(|i| ax.row(i).norm_squared()))
}

pub fn bd_forward(b: &CMat, a: &CMat, h: &CVector, x: &CVector) -> CVector {
    let bh = b * h;
    let ax = a * x;
    bh.zip_map(&ax, |u, v| u * v.conj())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensingParams {
    pub n1: usize,
    pub n2: usize,
    pub r: usize,
    pub m: usize,
    pub symmetric: bool,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub spectrum: Spectrum,
}

pub fn gen_matrix_sensing(n1: usize, n2: usize, r: usize, m: usize, symmetric: bool, seed: u64) -> Result<ProblemInstance> {
    gen_matrix_sensing_with(&SensingParams { n1, n2, r, m, symmetric, noise: 0.0, spectrum: Spectrum::Gaussian }, seed)
}

pub fn gen_matrix_sensing_with(p: &SensingParams, seed: u64) -> Result<ProblemInstance> {
    if p.m == 0 {
        return invalid("need at least one measurement");
    }
    let mut rng = Rng::new(seed);
    let truth = low_rank_truth(p.n1, p.n2, p.r, p.symmetric, &p.spectrum, &mut rng)?;
    let d = p.n1 * p.n2;
    let mut a = Mat::zeros(d, p.m);
    let half = std::f64::consts::FRAC_1_SQRT_2;
    for c in 0..p.m {
        if p.symmetric {
            let n = p.n1;
            for j in 0..n {
                for i in 0..=j {
                    let v = if i == j { rng.normal() } else { half * rng.normal() };
                    a[(i + j * n, c)] = v;
                    a[(j + i * n, c)] = v;
                }
            }
        } else {
            for k in 0..d {
                a[(k, c)] = rng.normal();
            }
        }
    }
    let mut y = sensing_forward(&a, &truth.m_star);
    if p.noise > 0.0 {
        for v in y.iter_mut() {
            *v += p.noise * rng.normal();
        }
    }
    Ok(ProblemInstance::Sensing(SensingInstance {
        n1: p.n1,
        n2: p.n2,
        r: p.r,
        m: p.m,
        symmetric: p.symmetric,
        noise: p.noise,
        seed,
        truth,
        a,
        y,
    }))
}

impl SensingInstance {
    /// Instance from explicit sensing matrices.
    pub fn from_design(truth: LowRankTruth, mats: &[Mat], symmetric: bool) -> Result<SensingInstance> {
        let (n1, n2) = truth.m_star.shape();
        if mats.is_empty() {
            return invalid("need at least one measurement");
        }
        let mut a = Mat::zeros(n1 * n2, mats.len());
        for (c, mi) in mats.iter().enumerate() {
            if mi.shape() != (n1, n2) {
                return Err(Error::Shape(format!("A_{c} is {:?}, expected {:?}", mi.shape(), (n1, n2))));
            }
            a.set_column(c, &Vector::from_column_slice(mi.as_slice()));
        }
        let y = sensing_forward(&a, &truth.m_star);
        Ok(SensingInstance { n1, n2, r: truth.rank(), m: mats.len(), symmetric, noise: 0.0, seed: 0, truth, a, y })
    }

    /// A_k = sqrt(m)·E_k over all m = n1·n2 entries, so that A*A is the identity.
    pub fn identity_operator(truth: LowRankTruth, symmetric: bool) -> SensingInstance {
        let (n1, n2) = truth.m_star.shape();
        let m = n1 * n2;
        let mut a = Mat::zeros(m, m);
        let s = (m as f64).sqrt();
        for k in 0..m {
            a[(k, k)] = s;
        }
        let y = sensing_forward(&a, &truth.m_star);
        SensingInstance { n1, n2, r: truth.rank(), m, symmetric, noise: 0.0, seed: 0, truth, a, y }
    }

    /// A_i as an n1×n2 matrix.
    pub fn sensing_matrix(&self, i: usize) -> Mat {
        Mat::from_column_slice(self.n1, self.n2, self.a.column(i).as_slice())
    }
}

pub fn gen_phase_retrieval(n: usize, m: usize, seed: u64) -> Result<ProblemInstance> {
    gen_phase_retrieval_noisy(n, m, 0.0, seed)
}

/// x⋆ uniform on the unit sphere, a_i ~ N(0, I_n).
pub fn gen_phase_retrieval_noisy(n: usize, m: usize, noise: f64, seed: u64) -> Result<ProblemInstance> {
    if n == 0 || m == 0 {
        return invalid("phase retrieval needs n, m >= 1");
    }
    let mut rng = Rng::new(seed);
    let x_star = rng.unit_sphere(n);
    let a = Mat::from_fn(m, n, |_, _| rng.normal());
    let mut y = pr_forward(&a, &x_star);
    if noise > 0.0 {
        for v in y.iter_mut() {
            *v += noise * rng.normal();
        }
    }
    Ok(ProblemInstance::PhaseRetrieval(PrInstance { n, m, noise, seed, x_star, a, y, outliers: vec![] }))
}

impl PrInstance {
    pub fn from_design(x_star: Vector, a: Mat) -> Result<PrInstance> {
        if a.ncols() != x_star.len() {
            return Err(Error::Shape("design width differs from signal length".into()));
        }
        let y = pr_forward(&a, &x_star);
        Ok(PrInstance { n: x_star.len(), m: a.nrows(), noise: 0.0, seed: 0, x_star, a, y, outliers: vec![] })
    }
}

pub fn gen_quadratic_sensing(n: usize, r: usize, m: usize, seed: u64) -> Result<ProblemInstance> {
    if m == 0 {
        return invalid("need at least one measurement");
    }
    let mut rng = Rng::new(seed);
    let truth = low_rank_truth(n, n, r, true, &Spectrum::Gaussian, &mut rng)?;
    let a = Mat::from_fn(m, n, |_, _| rng.normal());
    let y = qs_forward(&a, &truth.l);
    Ok(ProblemInstance::QuadraticSensing(QsInstance { n, r, m, seed, truth, a, y }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionParams {
    pub n1: usize,
    pub n2: usize,
    pub r: usize,
    pub p: f64,
    pub symmetric: bool,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub spectrum: Spectrum,
}

pub fn gen_matrix_completion(n1: usize, n2: usize, r: usize, p: f64, symmetric: bool, seed: u64) -> Result<ProblemInstance> {
    gen_matrix_completion_with(&CompletionParams { n1, n2, r, p, symmetric, noise: 0.0, spectrum: Spectrum::Gaussian }, seed)
}

fn bernoulli_mask(n1: usize, n2: usize, p: f64, symmetric: bool, rng: &mut Rng) -> Vec<(usize, usize)> {
    let mut omega = Vec::new();
    if symmetric {
        for i in 0..n1 {
            for j in i..n2 {
                if rng.bernoulli(p) {
                    omega.push((i, j));
                    if i != j {
                        omega.push((j, i));
                    }
                }
            }
        }
        omega.sort_unstable();
    } else {
        for i in 0..n1 {
            for j in 0..n2 {
                if rng.bernoulli(p) {
                    omega.push((i, j));
                }
            }
        }
    }
    omega
}

pub fn gen_matrix_completion_with(c: &CompletionParams, seed: u64) -> Result<ProblemInstance> {
    if !(0.0..=1.0).contains(&c.p) {
        return invalid(format!("sampling rate {} outside [0, 1]", c.p));
    }
    let mut rng = Rng::new(seed);
    let truth = low_rank_truth(c.n1, c.n2, c.r, c.symmetric, &c.spectrum, &mut rng)?;
    let omega = bernoulli_mask(c.n1, c.n2, c.p, c.symmetric, &mut rng);
    let mut obs: Vec<f64> = omega.iter().map(|&(i, j)| truth.m_star[(i, j)]).collect();
    if c.noise > 0.0 {
        if c.symmetric {
            let mut noise = std::collections::BTreeMap::new();
            for (k, &(i, j)) in omega.iter().enumerate() {
                let key = (i.min(j), i.max(j));
                let z = *noise.entry(key).or_insert_with(|| c.noise * rng.normal());
                obs[k] += z;
            }
        } else {
            for v in obs.iter_mut() {
                *v += c.noise * rng.normal();
            }
        }
    }
    Ok(ProblemInstance::Completion(McInstance {
        n1: c.n1,
        n2: c.n2,
        r: c.r,
        p: c.p,
        symmetric: c.symmetric,
        noise: c.noise,
        seed,
        truth,
        omega,
        obs,
    }))
}

impl McInstance {
    /// Realized |Ω|.
    pub fn observed(&self) -> usize {
        self.omega.len()
    }

    /// p⁻¹·P_Ω(observations) as a dense matrix.
    pub fn surrogate(&self) -> Mat {
        let mut y = Mat::zeros(self.n1, self.n2);
        if self.p > 0.0 {
            for (&(i, j), &v) in self.omega.iter().zip(&self.obs) {
                y[(i, j)] = v / self.p;
            }
        }
        y
    }
}

/// m×K block of the unitary DFT; row j is b_jᴴ.
pub fn dft_block(m: usize, k: usize) -> CMat {
    let s = 1.0 / (m as f64).sqrt();
    CMat::from_fn(m, k, |j, c| {
        let t = -2.0 * std::f64::consts::PI * ((j * c) % m) as f64 / m as f64;
        Complex64::new(t.cos() * s, t.sin() * s)
    })
}

pub fn gen_blind_deconv(k: usize, n: usize, m: usize, seed: u64) -> Result<ProblemInstance> {
    gen_blind_deconv_noisy(k, n, m, 0.0, seed)
}

pub fn gen_blind_deconv_noisy(k: usize, n: usize, m: usize, noise: f64, seed: u64) -> Result<ProblemInstance> {
    if k == 0 || n == 0 {
        return invalid("K and N must be positive");
    }
    if m < k {
        return invalid(format!("need m >= K, got m = {m}, K = {k}"));
    }
    let mut rng = Rng::new(seed);
    let mut h_star = CVector::from_fn(k, |_, _| rng.complex_normal());
    let mut x_star = CVector::from_fn(n, |_, _| rng.complex_normal());
    let nh = h_star.norm();
    let nx = x_star.norm();
    h_star.unscale_mut(nh);
    x_star.unscale_mut(nx);
    let b = dft_block(m, k);
    let a = CMat::from_fn(m, n, |_, _| rng.complex_normal());
    let mut y = bd_forward(&b, &a, &h_star, &x_star);
    if noise > 0.0 {
        for v in y.iter_mut() {
            *v += rng.complex_normal() * noise;
        }
    }
    Ok(ProblemInstance::BlindDeconv(BdInstance { k, n, m, noise, seed, h_star, x_star, b, a, y }))
}

impl BdInstance {
    pub fn from_design(h_star: CVector, x_star: CVector, b: CMat, a: CMat) -> Result<BdInstance> {
        if b.ncols() != h_star.len() || a.ncols() != x_star.len() || a.nrows() != b.nrows() {
            return Err(Error::Shape("blind deconvolution design".into()));
        }
        let y = bd_forward(&b, &a, &h_star, &x_star);
        Ok(BdInstance { k: h_star.len(), n: x_star.len(), m: b.nrows(), noise: 0.0, seed: 0, h_star, x_star, b, a, y })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpcaParams {
    pub n1: usize,
    pub n2: usize,
    pub r: usize,
    pub p: f64,
    pub alpha: f64,
    pub magnitude: f64,
    #[serde(default)]
    pub spectrum: Spectrum,
}

pub fn gen_rpca(n1: usize, n2: usize, r: usize, p: f64, alpha: f64, magnitude: f64, seed: u64) -> Result<ProblemInstance> {
    gen_rpca_with(&RpcaParams { n1, n2, r, p, alpha, magnitude, spectrum: Spectrum::Gaussian }, seed)
}

/// Square instances get a PSD truth with symmetric mask and outliers.
pub fn gen_rpca_with(c: &RpcaParams, seed: u64) -> Result<ProblemInstance> {
    if !(0.0..=1.0).contains(&c.p) || !(0.0..1.0).contains(&c.alpha) {
        return invalid("need p in [0, 1] and alpha in [0, 1)");
    }
    let symmetric = c.n1 == c.n2;
    let mut rng = Rng::new(seed);
    let truth = low_rank_truth(c.n1, c.n2, c.r, symmetric, &c.spectrum, &mut rng)?;
    let omega = bernoulli_mask(c.n1, c.n2, c.p, symmetric, &mut rng);
    let row_cap = (c.alpha * c.n2 as f64).ceil() as usize;
    let col_cap = (c.alpha * c.n1 as f64).ceil() as usize;
    let mut row_count = vec![0usize; c.n1];
    let mut col_count = vec![0usize; c.n2];
    let mut s_star = Mat::zeros(c.n1, c.n2);
    let target = (c.alpha * (c.n1 * c.n2) as f64).round() as usize;
    let mut placed = 0;
    let mut attempts = 0;
    while placed < target && attempts < 100 * target.max(1) {
        attempts += 1;
        let i = rng.below(c.n1);
        let j = rng.below(c.n2);
        let sign = if rng.bernoulli(0.5) { 1.0 } else { -1.0 };
        if s_star[(i, j)] != 0.0 {
            continue;
        }
        if symmetric {
            if i == j {
                continue;
            }
            if row_count[i] >= row_cap || row_count[j] >= row_cap || col_count[i] >= col_cap || col_count[j] >= col_cap {
                continue;
            }
            s_star[(i, j)] = sign * c.magnitude;
            s_star[(j, i)] = sign * c.magnitude;
            row_count[i] += 1;
            row_count[j] += 1;
            col_count[i] += 1;
            col_count[j] += 1;
            placed += 2;
        } else {
            if row_count[i] >= row_cap || col_count[j] >= col_cap {
                continue;
            }
            s_star[(i, j)] = sign * c.magnitude;
            row_count[i] += 1;
            col_count[j] += 1;
            placed += 1;
        }
    }
    let obs = omega.iter().map(|&(i, j)| truth.m_star[(i, j)] + s_star[(i, j)]).collect();
    Ok(ProblemInstance::RobustPca(RpcaInstance {
        n1: c.n1,
        n2: c.n2,
        r: c.r,
        p: c.p,
        alpha: c.alpha,
        magnitude: c.magnitude,
        symmetric,
        seed,
        truth,
        s_star,
        omega,
        obs,
    }))
}

/// x⋆ with uniform phases; W Hermitian, standard complex Gaussian above the
/// diagonal and real N(0, 1) on it.
pub fn gen_phase_sync(n: usize, sigma: f64, seed: u64) -> Result<ProblemInstance> {
    if n == 0 || !(sigma >= 0.0) {
        return invalid("phase sync needs n >= 1 and sigma >= 0");
    }
    let mut rng = Rng::new(seed);
    let x_star = CVector::from_fn(n, |_, _| {
        let t = 2.0 * std::f64::consts::PI * rng.uniform();
        Complex64::new(t.cos(), t.sin())
    });
    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            l[(i, j)] = x_star[i] * x_star[j].conj();
        }
    }
    if sigma > 0.0 {
        for j in 0..n {
            for i in 0..=j {
                if i == j {
                    l[(i, i)] += Complex64::new(sigma * rng.normal(), 0.0);
                } else {
                    let w = rng.complex_normal() * sigma;
                    l[(i, j)] += w;
                    l[(j, i)] += w.conj();
                }
            }
        }
    }
    Ok(ProblemInstance::PhaseSync(PsInstance { n, sigma, seed, x_star, l }))
}

/// Block (i, j) entry (a, b) is log P(z_ij = y_ij − a + b mod m) under the
/// channel P(0) = 1 − q, P(k) = q/(m − 1) otherwise; floored at 1e-12.
pub fn jointalign_matrix(n: usize, m: usize, q: f64, y: &[(usize, usize, usize)]) -> Mat {
    let floor = 1e-12f64;
    let p0 = (1.0 - q).max(floor).ln();
    let p1 = if m > 1 { (q / (m - 1) as f64).max(floor).ln() } else { p0 };
    let mut l = Mat::zeros(n * m, n * m);
    for &(i, j, yij) in y {
        for a in 0..m {
            for b in 0..m {
                let z = (yij + m + b - a) % m;
                let v = if z == 0 { p0 } else { p1 };
                l[(i * m + a, j * m + b)] = v;
                l[(j * m + b, i * m + a)] = v;
            }
        }
    }
    l
}

pub fn gen_joint_alignment(n: usize, alphabet: usize, flip_prob: f64, seed: u64) -> Result<ProblemInstance> {
    if n < 2 || alphabet < 2 || !(0.0..1.0).contains(&flip_prob) {
        return invalid("joint alignment needs n >= 2, m >= 2, flip probability in [0, 1)");
    }
    let mut rng = Rng::new(seed);
    let x_star: Vec<usize> = (0..n).map(|_| rng.below(alphabet)).collect();
    let mut y = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let z = if rng.bernoulli(flip_prob) { 1 + rng.below(alphabet - 1) } else { 0 };
            y.push((i, j, (x_star[i] + alphabet - x_star[j] + z) % alphabet));
        }
    }
    let l = jointalign_matrix(n, alphabet, flip_prob, &y);
    Ok(ProblemInstance::JointAlignment(JaInstance { n, alphabet, flip_prob, seed, x_star, y, l }))
}

/// Replace round(α·m) observations by uniform draws on [0, 10·max clean y].
pub fn corrupt_outliers(instance: &ProblemInstance, alpha_out: f64, seed: u64) -> Result<ProblemInstance> {
    let ProblemInstance::PhaseRetrieval(p) = instance else {
        return Err(Error::Family("outlier corruption is defined for phase retrieval".into()));
    };
    if !(0.0..=1.0).contains(&alpha_out) {
        return invalid("outlier fraction outside [0, 1]");
    }
    let mut out = p.clone();
    let k = (alpha_out * p.m as f64).round() as usize;
    if k == 0 {
        return Ok(ProblemInstance::PhaseRetrieval(out));
    }
    let mut rng = Rng::new(seed);
    let top = 10.0 * p.y.iter().fold(0.0f64, |a, &v| a.max(v));
    let mut idx = rng.sample_without_replacement(p.m, k);
    idx.sort_unstable();
    for &i in &idx {
        out.y[i] = top * rng.uniform();
    }
    out.outliers = idx;
    Ok(ProblemInstance::PhaseRetrieval(out))
}
