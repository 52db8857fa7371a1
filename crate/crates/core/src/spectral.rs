//! Spectral initializers: surrogate matrices, sample preprocessing and
//! initial-factor assembly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{dense_top_r_symmetric, top_r_svd_robust, top_r_symmetric_robust, unvec, CMat, Mat, SubspaceEstimate, Vector};
use crate::metrics::cosine_sq;
use crate::point::FactorPoint;
use crate::problems::*;
use crate::rng::derive_seed;

const EIG_TOL: f64 = 1e-10;

/// Weak recovery threshold of real phase retrieval.
pub const ALPHA_WEAK: f64 = 0.5;

/// Per-sample transform applied before forming a phase-retrieval surrogate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Preprocessing {
    Identity,
    /// y·1{|y| ≤ γ·mean(y)}.
    Trim { gamma: f64 },
    /// 1{y ≥ (cm)-th largest y}.
    Subset { c: f64 },
    /// y·1{y ≤ γ·median(y)}.
    Median { gamma: f64 },
    /// T*_α; requires α > 1/2.
    OptimalWeak { alpha: f64 },
    /// T*(y) = 1 − 1/y.
    OptimalUniform,
}

impl Preprocessing {
    pub fn trim_default() -> Self {
        Preprocessing::Trim { gamma: 3.0 }
    }
    pub fn subset_default() -> Self {
        Preprocessing::Subset { c: 1.0 / 6.0 }
    }
    /// γ = 20 keeps samples up to about 9‖x⋆‖² (median of y ≈ 0.455‖x⋆‖²).
    pub fn median_default() -> Self {
        Preprocessing::Median { gamma: 20.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Preprocessing::Trim { gamma } | Preprocessing::Median { gamma } if !(gamma > 0.0) => {
                invalid("truncation threshold must be positive")
            }
            Preprocessing::Subset { c } if !(c > 0.0 && c < 1.0) => invalid("subset fraction must lie in (0, 1)"),
            Preprocessing::OptimalWeak { alpha } if !(alpha > ALPHA_WEAK) || !alpha.is_finite() => {
                invalid("T*_alpha needs alpha > 1/2")
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Preprocessing::Identity => "identity".into(),
            Preprocessing::Trim { gamma } => format!("trim({gamma})"),
            Preprocessing::Subset { c } => format!("subset({c:.6})"),
            Preprocessing::Median { gamma } => format!("median({gamma})"),
            Preprocessing::OptimalWeak { alpha } => format!("optimal_weak({alpha})"),
            Preprocessing::OptimalUniform => "optimal_uniform".into(),
        }
    }

    /// Weights T(y_i) for all samples.
    pub fn weights(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.validate()?;
        let m = y.len();
        if m == 0 {
            return invalid("no samples");
        }
        let mean = y.iter().sum::<f64>() / m as f64;
        Ok(match *self {
            Preprocessing::Identity => y.to_vec(),
            Preprocessing::Trim { gamma } => {
                y.iter().map(|&v| if v.abs() <= gamma * mean { v } else { 0.0 }).collect()
            }
            Preprocessing::Subset { c } => {
                let k = ((c * m as f64).ceil() as usize).clamp(1, m);
                let mut sorted = y.to_vec();
                sorted.sort_by(|a, b| b.total_cmp(a));
                let thresh = sorted[k - 1];
                y.iter().map(|&v| if v >= thresh { 1.0 } else { 0.0 }).collect()
            }
            Preprocessing::Median { gamma } => {
                let med = lower_median(y);
                y.iter().map(|&v| if v <= gamma * med { v } else { 0.0 }).collect()
            }
            Preprocessing::OptimalWeak { alpha } => {
                let s = mean_or_one(mean);
                y.iter().map(|&v| t_weak(v / s, alpha)).collect()
            }
            Preprocessing::OptimalUniform => {
                let s = mean_or_one(mean);
                y.iter().map(|&v| t_star(v / s)).collect()
            }
        })
    }
}

fn mean_or_one(mean: f64) -> f64 {
    if mean > 0.0 {
        mean
    } else {
        1.0
    }
}

/// Lower middle order statistic.
pub fn lower_median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s[(s.len() - 1) / 2]
}

/// T*(y) = 1 − 1/y with the input clamped at 1e-12.
pub fn t_star(y: f64) -> f64 {
    1.0 - 1.0 / y.max(1e-12)
}

/// T*_α(y) = √α*·T*(y) / (√α − (√α − √α*)·T*(y)).
pub fn t_weak(y: f64, alpha: f64) -> f64 {
    let t = t_star(y);
    let sa = alpha.sqrt();
    let ss = ALPHA_WEAK.sqrt();
    ss * t / (sa - (sa - ss) * t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimalVariant {
    Uniform,
    Weak,
}

/// Exact value of the optimal preprocessing functions (no normalization of y).
pub fn optimal_t(y: f64, variant: OptimalVariant, alpha: f64) -> Result<f64> {
    match variant {
        OptimalVariant::Uniform => {
            if !(y > 0.0) {
                return invalid("T* needs y > 0");
            }
            Ok(t_star(y))
        }
        OptimalVariant::Weak => {
            if !(y > 0.0) || !(alpha > ALPHA_WEAK) {
                return invalid("T*_alpha needs y > 0 and alpha > 1/2");
            }
            Ok(t_weak(y, alpha))
        }
    }
}

#[derive(Debug, Clone)]
pub enum Subspaces {
    Real(Vec<SubspaceEstimate<f64>>),
    Complex(Vec<SubspaceEstimate<Complex64>>),
}

#[derive(Debug, Clone)]
pub struct SpectralEstimate {
    pub point: FactorPoint,
    pub subspaces: Subspaces,
    /// Norm estimate used for scaling (mean(y), σ₁, ...).
    pub scale: f64,
    pub prep: Option<Preprocessing>,
}

impl SpectralEstimate {
    /// Leading eigen or singular value.
    pub fn top_value(&self) -> f64 {
        match &self.subspaces {
            Subspaces::Real(s) => s[0].values[0],
            Subspaces::Complex(s) => s[0].values[0],
        }
    }
}

fn sqrt_diag(values: &[f64]) -> Mat {
    Mat::from_diagonal(&Vector::from_iterator(values.len(), values.iter().map(|v| v.max(0.0).sqrt())))
}

/// Y = (1/m)Σ y_i A_i.
pub fn surrogate_sensing(s: &SensingInstance) -> Mat {
    let v = &s.a * &s.y / s.m as f64;
    unvec(v.as_slice(), s.n1, s.n2)
}

fn check_rank(r: usize, n1: usize, n2: usize) -> Result<()> {
    if r == 0 || r > n1.min(n2) {
        return invalid(format!("rank {r} out of range 1..={}", n1.min(n2)));
    }
    Ok(())
}

/// X₀ = UΛ₊^{1/2} from the top-r eigenpairs of a symmetric surrogate.
pub fn factor_symmetric(y: &Mat, r: usize) -> Result<(Mat, SubspaceEstimate<f64>)> {
    check_rank(r, y.nrows(), y.ncols())?;
    let ys = (y + y.transpose()) * 0.5;
    let est = top_r_symmetric_robust(&ys, r, EIG_TOL)?;
    let x = &est.basis * sqrt_diag(&est.values);
    Ok((x, est))
}

/// L₀ = UΣ^{1/2}, R₀ = VΣ^{1/2} from the top-r SVD.
pub fn factor_asymmetric(y: &Mat, r: usize) -> Result<(Mat, Mat, SubspaceEstimate<f64>, SubspaceEstimate<f64>)> {
    check_rank(r, y.nrows(), y.ncols())?;
    let (u, v) = top_r_svd_robust(y, r, EIG_TOL)?;
    let root = sqrt_diag(&u.values);
    Ok((&u.basis * &root, &v.basis * &root, u, v))
}

fn from_surrogate(y: &Mat, r: usize, symmetric: bool) -> Result<SpectralEstimate> {
    if symmetric {
        let (x, est) = factor_symmetric(y, r)?;
        let scale = est.values[0].max(0.0);
        Ok(SpectralEstimate { point: FactorPoint::Sym(x), subspaces: Subspaces::Real(vec![est]), scale, prep: None })
    } else {
        let (l, rr, u, v) = factor_asymmetric(y, r)?;
        let scale = u.values[0];
        Ok(SpectralEstimate { point: FactorPoint::Asym { l, r: rr }, subspaces: Subspaces::Real(vec![u, v]), scale, prep: None })
    }
}

pub fn init_sensing(inst: &ProblemInstance, r: usize) -> Result<SpectralEstimate> {
    let ProblemInstance::Sensing(s) = inst else {
        return Err(Error::Family("init_sensing needs a matrix sensing instance".into()));
    };
    from_surrogate(&surrogate_sensing(s), r, s.symmetric)
}

/// How the leading eigenvector of a phase-retrieval surrogate is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrScale {
    /// √(λ/3) for the plain surrogate with m ≥ n log n, √mean(y) otherwise.
    #[default]
    Auto,
    MeanY,
    Lambda3,
    /// median(y)/0.4549 (median of χ²₁), robust to outliers.
    MedianY,
}

/// Median of the χ² distribution with one degree of freedom.
pub const CHI2_1_MEDIAN: f64 = 0.454_936_423_119_572_7;

/// Y_T = (1/m)Σ T(y_i)a_ia_iᵀ; also returns the number of samples with nonzero weight.
pub fn pr_surrogate(p: &PrInstance, prep: &Preprocessing) -> Result<(Mat, usize)> {
    let w = prep.weights(p.y.as_slice())?;
    let kept = w.iter().filter(|&&v| v != 0.0).count();
    if kept == 0 {
        return invalid(format!("all samples truncated away by {}", prep.label()));
    }
    let mut wa = p.a.clone();
    for (i, &wi) in w.iter().enumerate() {
        wa.row_mut(i).scale_mut(wi);
    }
    let y = p.a.tr_mul(&wa) / p.m as f64;
    Ok((y, kept))
}

pub fn init_phase_retrieval(inst: &ProblemInstance, prep: &Preprocessing) -> Result<SpectralEstimate> {
    init_phase_retrieval_scaled(inst, prep, PrScale::Auto)
}

pub fn init_phase_retrieval_scaled(inst: &ProblemInstance, prep: &Preprocessing, scale: PrScale) -> Result<SpectralEstimate> {
    let ProblemInstance::PhaseRetrieval(p) = inst else {
        return Err(Error::Family("init_phase_retrieval needs a phase retrieval instance".into()));
    };
    let (y, _) = pr_surrogate(p, prep)?;
    let est = top_r_symmetric_robust(&y, 1, EIG_TOL)?;
    let mean_y = p.y.mean();
    let lambda = est.values[0];
    let norm2 = match scale {
        PrScale::Lambda3 => lambda / 3.0,
        PrScale::MeanY => mean_y,
        PrScale::MedianY => lower_median(p.y.as_slice()) / CHI2_1_MEDIAN,
        PrScale::Auto => {
            if *prep == Preprocessing::Identity && (p.m as f64) >= p.n as f64 * (p.n as f64).ln() {
                lambda / 3.0
            } else {
                mean_y
            }
        }
    };
    let x0 = est.basis.column(0) * norm2.max(0.0).sqrt();
    Ok(SpectralEstimate { point: FactorPoint::Vector(x0), subspaces: Subspaces::Real(vec![est]), scale: norm2, prep: Some(*prep) })
}

/// X₀ = UΣ^{1/2}, Σ_ii = max((λ_i(Y) − mean(y))/2, 0).
pub fn init_quadratic_sensing(inst: &ProblemInstance, r: usize) -> Result<SpectralEstimate> {
    let ProblemInstance::QuadraticSensing(q) = inst else {
        return Err(Error::Family("init_quadratic_sensing needs a quadratic sensing instance".into()));
    };
    let p = PrInstance { n: q.n, m: q.m, noise: 0.0, seed: q.seed, x_star: Vector::zeros(q.n), a: q.a.clone(), y: q.y.clone(), outliers: vec![] };
    let (y, _) = pr_surrogate(&p, &Preprocessing::Identity)?;
    let sigma = q.y.mean();
    qs_from_surrogate(&y, r, sigma)
}

/// Quadratic-sensing factor assembly given Y and the estimate σ of ‖X⋆‖_F².
pub fn qs_from_surrogate(y: &Mat, r: usize, sigma: f64) -> Result<SpectralEstimate> {
    check_rank(r, y.nrows(), y.ncols())?;
    let est = top_r_symmetric_robust(y, r, EIG_TOL)?;
    let shifted: Vec<f64> = est.values.iter().map(|&l| ((l - sigma) / 2.0).max(0.0)).collect();
    let x = &est.basis * sqrt_diag(&shifted);
    Ok(SpectralEstimate { point: FactorPoint::Sym(x), subspaces: Subspaces::Real(vec![est]), scale: sigma, prep: None })
}

/// Y = Σ_j y_j b_j a_jᴴ (E[Y] = h⋆x⋆ᴴ for the unitary DFT block).
pub fn bd_surrogate(b: &BdInstance) -> CMat {
    let mut wa = b.a.clone();
    for j in 0..b.m {
        let yj = b.y[j];
        for v in wa.row_mut(j).iter_mut() {
            *v *= yj;
        }
    }
    b.b.ad_mul(&wa)
}

/// h₀ = √σ·u, x₀ = √σ·v.
pub fn init_blind_deconv(inst: &ProblemInstance) -> Result<SpectralEstimate> {
    let ProblemInstance::BlindDeconv(b) = inst else {
        return Err(Error::Family("init_blind_deconv needs a blind deconvolution instance".into()));
    };
    let y = bd_surrogate(b);
    let (u, v) = top_r_svd_robust(&y, 1, EIG_TOL)?;
    let sigma = u.values[0];
    let root = Complex64::new(sigma.sqrt(), 0.0);
    let h = u.basis.column(0) * root;
    let x = v.basis.column(0) * root;
    Ok(SpectralEstimate { point: FactorPoint::ComplexPair { h, x }, subspaces: Subspaces::Complex(vec![u, v]), scale: sigma, prep: None })
}

/// Y = p⁻¹P_Ω(M⋆).
pub fn init_matrix_completion(inst: &ProblemInstance, r: usize) -> Result<SpectralEstimate> {
    let ProblemInstance::Completion(c) = inst else {
        return Err(Error::Family("init_matrix_completion needs a matrix completion instance".into()));
    };
    if c.p <= 0.0 || c.omega.is_empty() {
        return invalid("no observed entries");
    }
    from_surrogate(&c.surrogate(), r, c.symmetric)
}

/// Keeps entries that are at least the l-th largest magnitude in both their row and column.
pub fn hard_threshold(a: &Mat, l: usize) -> Mat {
    let (n1, n2) = a.shape();
    let mut out = Mat::zeros(n1, n2);
    if l == 0 {
        return out;
    }
    let kth = |mut v: Vec<f64>| -> f64 {
        v.sort_by(|x, y| y.total_cmp(x));
        if l <= v.len() {
            v[l - 1]
        } else {
            0.0
        }
    };
    let row_t: Vec<f64> = (0..n1).map(|i| kth(a.row(i).iter().map(|v| v.abs()).collect())).collect();
    let col_t: Vec<f64> = (0..n2).map(|j| kth(a.column(j).iter().map(|v| v.abs()).collect())).collect();
    for j in 0..n2 {
        for i in 0..n1 {
            let v = a[(i, j)];
            if v != 0.0 && v.abs() >= row_t[i] && v.abs() >= col_t[j] {
                out[(i, j)] = v;
            }
        }
    }
    out
}

/// l = ⌈c·α·n·p⌉ with n the column count.
pub fn rpca_threshold_count(c: &RpcaInstance, c_thresh: f64) -> usize {
    (c_thresh * c.alpha * c.n2.max(c.n1) as f64 * c.p).ceil() as usize
}

/// Dense P_Ω(A) from values aligned with Ω.
pub fn scatter(n1: usize, n2: usize, omega: &[(usize, usize)], vals: &[f64]) -> Mat {
    let mut m = Mat::zeros(n1, n2);
    for (&(i, j), &v) in omega.iter().zip(vals) {
        m[(i, j)] = v;
    }
    m
}

/// S₀ = H_l(P_Ω(Γ)); Y = p⁻¹P_Ω(Γ − S₀).
pub fn init_rpca(inst: &ProblemInstance, r: usize, c_thresh: f64) -> Result<(SpectralEstimate, Mat)> {
    let ProblemInstance::RobustPca(c) = inst else {
        return Err(Error::Family("init_rpca needs a robust PCA instance".into()));
    };
    if c.p <= 0.0 || c.omega.is_empty() {
        return invalid("no observed entries");
    }
    let gamma = scatter(c.n1, c.n2, &c.omega, &c.obs);
    let l = rpca_threshold_count(c, c_thresh);
    let s0 = if c.alpha > 0.0 { hard_threshold(&gamma, l) } else { Mat::zeros(c.n1, c.n2) };
    let y = (&gamma - &s0) / c.p;
    Ok((from_surrogate(&y, r, c.symmetric)?, s0))
}

/// Support Ŝ = {i : Y_ii > γ} of the plain surrogate, then the spectral
/// estimate on the restricted surrogate, zero-padded back to n.
pub fn init_sparse_pr(inst: &ProblemInstance, k: usize, gamma: f64) -> Result<SpectralEstimate> {
    let ProblemInstance::PhaseRetrieval(p) = inst else {
        return Err(Error::Family("init_sparse_pr needs a phase retrieval instance".into()));
    };
    let (y, _) = pr_surrogate(p, &Preprocessing::Identity)?;
    let mut support: Vec<usize> = (0..p.n).filter(|&i| y[(i, i)] > gamma).collect();
    if support.is_empty() {
        return invalid("empty support");
    }
    if k > 0 && support.len() > k {
        support.sort_by(|&a, &b| y[(b, b)].total_cmp(&y[(a, a)]));
        support.truncate(k);
        support.sort_unstable();
    }
    let s = support.len();
    let sub = Mat::from_fn(s, s, |a, b| y[(support[a], support[b])]);
    let est = top_r_symmetric_robust(&sub, 1, EIG_TOL)?;
    let mean_y = p.y.mean();
    let mut x0 = Vector::zeros(p.n);
    for (a, &i) in support.iter().enumerate() {
        x0[i] = est.basis[(a, 0)] * mean_y.max(0.0).sqrt();
    }
    Ok(SpectralEstimate { point: FactorPoint::Vector(x0), subspaces: Subspaces::Real(vec![est]), scale: mean_y, prep: Some(Preprocessing::Identity) })
}

/// Leading eigenvector of L with entries normalized to unit modulus (zeros to 1).
pub fn init_phase_sync(inst: &ProblemInstance) -> Result<FactorPoint> {
    let ProblemInstance::PhaseSync(p) = inst else {
        return Err(Error::Family("init_phase_sync needs a phase synchronization instance".into()));
    };
    let est = top_r_symmetric_robust(&p.l, 1, EIG_TOL)?;
    Ok(FactorPoint::ComplexVector(est.basis.column(0).map(unit_phase)))
}

/// Rank-(m−1) approximation of the block-centred likelihood matrix. Every
/// column is projected onto the one-hot set and the candidate with the
/// largest xᵀLx is returned (first one on ties).
pub fn init_joint_alignment(inst: &ProblemInstance) -> Result<Vector> {
    let ProblemInstance::JointAlignment(j) = inst else {
        return Err(Error::Family("init_joint_alignment needs a joint alignment instance".into()));
    };
    let (n, m) = (j.n, j.alphabet);
    let mut c = j.l.clone();
    for bi in 0..n {
        for bj in 0..n {
            let mut block = c.view_mut((bi * m, bj * m), (m, m));
            let mean = block.sum() / (m * m) as f64;
            block.add_scalar_mut(-mean);
        }
    }
    let est = dense_top_r_symmetric(&c, m - 1)?;
    let low = &est.basis * Mat::from_diagonal(&Vector::from_vec(est.values.clone())) * est.basis.transpose();
    let mut best: Option<(f64, Vector)> = None;
    for k in 0..n * m {
        let cand = crate::direct::project_vertices(&low.column(k).into_owned(), m)?;
        let score = cand.dot(&(&j.l * &cand));
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, cand));
        }
    }
    Ok(best.map(|(_, v)| v).unwrap_or_else(|| Vector::zeros(n * m)))
}

pub fn unit_phase(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r > 0.0 {
        z / r
    } else {
        Complex64::new(1.0, 0.0)
    }
}

/// One row of a cosine-similarity curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoRow {
    pub alpha: f64,
    pub prep: String,
    pub mean_rho: f64,
    pub std_rho: f64,
    pub trials: usize,
}

/// Cosine similarities of the spectral estimate for each (α, trial), m = ⌈αn⌉.
/// Trial seeds are derived from (seed, α index, trial) so preprocessings
/// compared at the same seed see the same instances.
pub fn rho_samples(n: usize, alphas: &[f64], prep: &Preprocessing, trials: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    prep.validate()?;
    let mut out = Vec::with_capacity(alphas.len());
    for (ai, &alpha) in alphas.iter().enumerate() {
        if !(alpha > 0.0) {
            return invalid("sampling ratios must be positive");
        }
        let m = (alpha * n as f64).ceil() as usize;
        let mut rhos = Vec::with_capacity(trials);
        for t in 0..trials {
            let inst = gen_phase_retrieval(n, m, derive_seed(seed, ai as u64, t as u64))?;
            let ProblemInstance::PhaseRetrieval(p) = &inst else { unreachable!() };
            let rho = match init_phase_retrieval(&inst, prep) {
                Ok(est) => match &est.point {
                    FactorPoint::Vector(x) => cosine_sq(x, &p.x_star).unwrap_or(0.0),
                    _ => 0.0,
                },
                // Everything truncated: no information.
                Err(Error::Invalid(_)) => 0.0,
                Err(e) => return Err(e),
            };
            rhos.push(rho);
        }
        out.push(rhos);
    }
    Ok(out)
}

pub fn rho_vs_alpha_experiment(n: usize, alphas: &[f64], prep: &Preprocessing, trials: usize, seed: u64) -> Result<Vec<RhoRow>> {
    if trials == 0 {
        return invalid("trials must be positive");
    }
    let samples = rho_samples(n, alphas, prep, trials, seed)?;
    Ok(alphas
        .iter()
        .zip(samples)
        .map(|(&alpha, rhos)| {
            let (mean, std) = mean_std(&rhos);
            RhoRow { alpha, prep: prep.label(), mean_rho: mean, std_rho: std, trials }
        })
        .collect())
}

pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let ra = ranks(a);
    let rb = ranks(b);
    let (ma, _) = mean_std(&ra);
    let (mb, _) = mean_std(&rb);
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        num += (x - ma) * (y - mb);
        da += (x - ma).powi(2);
        db += (y - mb).powi(2);
    }
    if da == 0.0 || db == 0.0 {
        return 0.0;
    }
    num / (da * db).sqrt()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

/// Population surrogate E[Y] = 2x⋆x⋆ᵀ + ‖x⋆‖²I (quadratic sensing: X⋆ in place of x⋆).
pub fn population_pr_surrogate(xstar: &Mat) -> Mat {
    let n = xstar.nrows();
    xstar * xstar.transpose() * 2.0 + Mat::identity(n, n) * xstar.norm_squared()
}
