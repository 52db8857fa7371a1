use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::*;
use crate::linalg::unvec;
use crate::metrics::bd_incoherence;

/// Default weight of the factor-balancing term for asymmetric families.
pub const DEFAULT_BALANCE: f64 = 1.0 / 32.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegParams {
    /// λ{G₀(α₁‖L‖²) + G₀(α₂‖R‖²) + Σ G₀(α₃‖L_i‖²) + Σ G₀(α₄‖R_i‖²)}; the
    /// symmetric case uses the α₁ and α₃ terms on X.
    Completion { lambda: f64, alpha: [f64; 4] },
    /// λΣG₀(m|b_iᴴh|²/(8μ²d)) + λG₀(‖h‖²/(2d)) + λG₀(‖x‖²/(2d)), d = ‖h⋆‖‖x⋆‖.
    BlindDeconv { lambda: f64, mu: f64, scale: f64 },
}

impl RegParams {
    /// α's chosen so every G₀ argument equals 1 at the truth.
    pub fn completion_at_truth(truth: &LowRankTruth, lambda: f64) -> RegParams {
        let rowmax = |m: &Mat| (0..m.nrows()).map(|i| m.row(i).norm_squared()).fold(0.0, f64::max);
        RegParams::Completion {
            lambda,
            alpha: [
                1.0 / truth.l.norm_squared(),
                1.0 / truth.r.norm_squared(),
                1.0 / rowmax(&truth.l),
                1.0 / rowmax(&truth.r),
            ],
        }
    }

    /// μ is the incoherence of h⋆.
    pub fn bd_at_truth(inst: &BdInstance, lambda: f64) -> RegParams {
        RegParams::BlindDeconv {
            lambda,
            mu: bd_incoherence(&inst.h_star, &inst.b).unwrap_or(1.0),
            scale: inst.h_star.norm() * inst.x_star.norm(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    Plain,
    /// Amplitude loss, phase retrieval only.
    Amplitude,
    Regularized(RegParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub kind: LossKind,
    /// λ of λ‖LᵀL − RᵀR‖², asymmetric families only.
    pub balance: f64,
}

impl Default for LossSpec {
    fn default() -> Self {
        LossSpec { kind: LossKind::Plain, balance: DEFAULT_BALANCE }
    }
}

impl LossSpec {
    pub fn plain() -> Self {
        Self::default()
    }
    pub fn amplitude() -> Self {
        LossSpec { kind: LossKind::Amplitude, ..Default::default() }
    }
    pub fn regularized(p: RegParams) -> Self {
        LossSpec { kind: LossKind::Regularized(p), ..Default::default() }
    }
}

#[derive(Debug, Clone)]
pub struct LossEval {
    pub loss: f64,
    /// Real gradient, or ∂f/∂z̄ for complex unknowns.
    pub grad: FactorPoint,
    /// Search direction used by gradient descent; equals `grad` except for
    /// blind deconvolution where the h and x blocks are divided by ‖x‖² and ‖h‖².
    pub direction: FactorPoint,
}

fn plain(loss: f64, grad: FactorPoint) -> LossEval {
    LossEval { loss, direction: grad.clone(), grad }
}

fn g0(z: f64) -> f64 {
    let t = (z - 1.0).max(0.0);
    t * t
}

fn g0_prime(z: f64) -> f64 {
    2.0 * (z - 1.0).max(0.0)
}

pub fn loss_and_grad(inst: &ProblemInstance, point: &FactorPoint, spec: &LossSpec) -> Result<LossEval> {
    let kind_err = |what: &str| Err(Error::Family(format!("{what} loss not defined for {:?}", inst.family())));
    match (&spec.kind, inst) {
        (LossKind::Amplitude, ProblemInstance::PhaseRetrieval(_)) => {}
        (LossKind::Amplitude, _) => return kind_err("amplitude"),
        (LossKind::Regularized(RegParams::Completion { .. }), ProblemInstance::Completion(_)) => {}
        (LossKind::Regularized(RegParams::BlindDeconv { .. }), ProblemInstance::BlindDeconv(_)) => {}
        (LossKind::Regularized(_), _) => return kind_err("this regularized"),
        _ => {}
    }
    let shape_err = || Err(Error::Shape(format!("{} point for {:?}", point.kind(), inst.family())));
    match (inst, point) {
        (ProblemInstance::Sensing(s), FactorPoint::Sym(x)) if s.symmetric => {
            check_rows(x, s.n1)?;
            Ok(sensing_sym(s, x))
        }
        (ProblemInstance::Sensing(s), FactorPoint::Asym { l, r }) if !s.symmetric => {
            check_pair(l, r, s.n1, s.n2)?;
            Ok(sensing_asym(s, l, r, spec.balance))
        }
        (ProblemInstance::PhaseRetrieval(p), FactorPoint::Vector(x)) => {
            if x.len() != p.n {
                return shape_err();
            }
            Ok(match spec.kind {
                LossKind::Amplitude => pr_amplitude(p, x),
                _ => pr_intensity(p, x, None),
            })
        }
        (ProblemInstance::QuadraticSensing(q), FactorPoint::Sym(x)) => {
            check_rows(x, q.n)?;
            Ok(qs_loss(q, x))
        }
        (ProblemInstance::Completion(c), FactorPoint::Sym(x)) if c.symmetric => {
            check_rows(x, c.n1)?;
            let mut ev = mc_sym(&c.omega, &c.obs, None, c.p, x);
            if let LossKind::Regularized(RegParams::Completion { lambda, alpha }) = &spec.kind {
                let mut g = ev.grad.as_sym().unwrap().clone();
                ev.loss += mc_reg(x, *lambda, alpha[0], alpha[2], &mut g);
                ev = plain(ev.loss, FactorPoint::Sym(g));
            }
            Ok(ev)
        }
        (ProblemInstance::Completion(c), FactorPoint::Asym { l, r }) if !c.symmetric => {
            check_pair(l, r, c.n1, c.n2)?;
            let (mut loss, mut gl, mut gr) = mc_asym(c, l, r, spec.balance);
            if let LossKind::Regularized(RegParams::Completion { lambda, alpha }) = &spec.kind {
                loss += mc_reg(l, *lambda, alpha[0], alpha[2], &mut gl);
                loss += mc_reg(r, *lambda, alpha[1], alpha[3], &mut gr);
            }
            Ok(plain(loss, FactorPoint::Asym { l: gl, r: gr }))
        }
        (ProblemInstance::BlindDeconv(b), FactorPoint::ComplexPair { h, x }) => {
            if h.len() != b.k || x.len() != b.n {
                return shape_err();
            }
            let reg = match &spec.kind {
                LossKind::Regularized(RegParams::BlindDeconv { lambda, mu, scale }) => Some((*lambda, *mu, *scale)),
                _ => None,
            };
            Ok(bd_loss(b, h, x, reg))
        }
        (ProblemInstance::RobustPca(c), FactorPoint::Sym(x)) if c.symmetric => {
            check_rows(x, c.n1)?;
            Ok(rpca_loss_and_grad(c, x, &c.s_star))
        }
        (ProblemInstance::PhaseSync(_) | ProblemInstance::JointAlignment(_), _) => Err(Error::Family(
            "phase synchronization and joint alignment are solved by the projected power method".into(),
        )),
        _ => shape_err(),
    }
}

fn check_rows(x: &Mat, n: usize) -> Result<()> {
    if x.nrows() != n {
        return Err(Error::Shape(format!("factor has {} rows, expected {n}", x.nrows())));
    }
    Ok(())
}

fn check_pair(l: &Mat, r: &Mat, n1: usize, n2: usize) -> Result<()> {
    if l.nrows() != n1 || r.nrows() != n2 || l.ncols() != r.ncols() {
        return Err(Error::Shape("factor pair dimensions".into()));
    }
    Ok(())
}

fn sensing_sym(s: &SensingInstance, x: &Mat) -> LossEval {
    let m = s.m as f64;
    let xx = x * x.transpose();
    let res = sensing_forward(&s.a, &xx) - &s.y;
    let loss = res.norm_squared() / (4.0 * m);
    let g = unvec((&s.a * &res).as_slice(), s.n1, s.n2) / m;
    let gs = (&g + g.transpose()) * 0.5;
    plain(loss, FactorPoint::Sym(gs * x))
}

fn balance_terms(l: &Mat, r: &Mat, lambda: f64, gl: &mut Mat, gr: &mut Mat) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let d = l.transpose() * l - r.transpose() * r;
    *gl += l * &d * (4.0 * lambda);
    *gr -= r * &d * (4.0 * lambda);
    lambda * d.norm_squared()
}

fn sensing_asym(s: &SensingInstance, l: &Mat, r: &Mat, balance: f64) -> LossEval {
    let m = s.m as f64;
    let lr = l * r.transpose();
    let res = sensing_forward(&s.a, &lr) - &s.y;
    let mut loss = res.norm_squared() / (4.0 * m);
    let g = unvec((&s.a * &res).as_slice(), s.n1, s.n2) / m;
    let mut gl = &g * r * 0.5;
    let mut gr = g.transpose() * l * 0.5;
    loss += balance_terms(l, r, balance, &mut gl, &mut gr);
    plain(loss, FactorPoint::Asym { l: gl, r: gr })
}

/// Intensity loss; `mask` restricts the gradient sum (the loss is still over all samples).
pub fn pr_intensity(p: &PrInstance, x: &Vector, mask: Option<&[bool]>) -> LossEval {
    let m = p.m as f64;
    let ax = &p.a * x;
    let res = ax.map(|v| v * v) - &p.y;
    let loss = res.norm_squared() / (4.0 * m);
    let mut w = res.component_mul(&ax);
    if let Some(mask) = mask {
        for (wi, &keep) in w.iter_mut().zip(mask) {
            if !keep {
                *wi = 0.0;
            }
        }
    }
    plain(loss, FactorPoint::Vector(p.a.tr_mul(&w) / m))
}

fn sgn0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn pr_amplitude(p: &PrInstance, x: &Vector) -> LossEval {
    let m = p.m as f64;
    let ax = &p.a * x;
    let mut loss = 0.0;
    let w = Vector::from_iterator(
        p.m,
        ax.iter().zip(p.y.iter()).map(|(&v, &y)| {
            let sy = y.max(0.0).sqrt();
            let d = v.abs() - sy;
            loss += d * d;
            v - sy * sgn0(v)
        }),
    );
    plain(loss / (2.0 * m), FactorPoint::Vector(p.a.tr_mul(&w) / m))
}

fn qs_loss(q: &QsInstance, x: &Mat) -> LossEval {
    let m = q.m as f64;
    let ax = &q.a * x;
    let res = Vector::from_iterator(q.m, (0..q.m).map(|i| ax.row(i).norm_squared() - q.y[i]));
    let loss = res.norm_squared() / (4.0 * m);
    let mut weighted = ax;
    for i in 0..q.m {
        let ri = res[i];
        weighted.row_mut(i).scale_mut(ri);
    }
    plain(loss, FactorPoint::Sym(q.a.tr_mul(&weighted) / m))
}

/// 1/(4p)·Σ_Ω((XXᵀ)_ij + S_ij − obs_ij)² with its gradient.
fn mc_sym(omega: &[(usize, usize)], obs: &[f64], s: Option<&Mat>, p: f64, x: &Mat) -> LossEval {
    let (n, r) = x.shape();
    let mut g = Mat::zeros(n, r);
    if omega.is_empty() || p <= 0.0 {
        return plain(0.0, FactorPoint::Sym(g));
    }
    let xt = x.transpose();
    let mut loss = 0.0;
    let c = 1.0 / (2.0 * p);
    for (&(i, j), &o) in omega.iter().zip(obs) {
        let xi = xt.column(i);
        let xj = xt.column(j);
        let mut res = xi.dot(&xj) - o;
        if let Some(s) = s {
            res += s[(i, j)];
        }
        loss += res * res;
        for k in 0..r {
            g[(i, k)] += c * res * xj[k];
            g[(j, k)] += c * res * xi[k];
        }
    }
    plain(loss / (4.0 * p), FactorPoint::Sym(g))
}

fn mc_asym(c: &McInstance, l: &Mat, r: &Mat, balance: f64) -> (f64, Mat, Mat) {
    let rank = l.ncols();
    let mut gl = Mat::zeros(c.n1, rank);
    let mut gr = Mat::zeros(c.n2, rank);
    let mut loss = 0.0;
    if !c.omega.is_empty() && c.p > 0.0 {
        let lt = l.transpose();
        let rt = r.transpose();
        let k = 1.0 / (2.0 * c.p);
        for (&(i, j), &o) in c.omega.iter().zip(&c.obs) {
            let li = lt.column(i);
            let rj = rt.column(j);
            let res = li.dot(&rj) - o;
            loss += res * res;
            for t in 0..rank {
                gl[(i, t)] += k * res * rj[t];
                gr[(j, t)] += k * res * li[t];
            }
        }
        loss /= 4.0 * c.p;
    }
    loss += balance_terms(l, r, balance, &mut gl, &mut gr);
    (loss, gl, gr)
}

/// λG₀(α_f‖X‖²) + λΣG₀(α_row‖X_i‖²); gradient accumulated into `g`.
pub(crate) fn mc_reg(x: &Mat, lambda: f64, alpha_f: f64, alpha_row: f64, g: &mut Mat) -> f64 {
    let zf = alpha_f * x.norm_squared();
    let mut val = g0(zf);
    *g += x * (lambda * g0_prime(zf) * alpha_f * 2.0);
    for i in 0..x.nrows() {
        let zi = alpha_row * x.row(i).norm_squared();
        val += g0(zi);
        let coef = lambda * g0_prime(zi) * alpha_row * 2.0;
        if coef != 0.0 {
            let row = x.row(i) * coef;
            let mut gi = g.row_mut(i);
            gi += row;
        }
    }
    lambda * val
}

fn bd_loss(b: &BdInstance, h: &CVector, x: &CVector, reg: Option<(f64, f64, f64)>) -> LossEval {
    let bh = &b.b * h;
    let ax = &b.a * x;
    let u = bh.zip_map(&ax, |p, q| p * q.conj()) - &b.y;
    let mut loss = u.norm_squared();
    let mut gh = b.b.ad_mul(&u.component_mul(&ax));
    let mut gx = b.a.ad_mul(&u.map(|z| z.conj()).component_mul(&bh));
    if let Some((lambda, mu, d)) = reg {
        let m = b.m as f64;
        let c = m / (8.0 * mu * mu * d);
        let mut w = CVector::zeros(b.m);
        for j in 0..b.m {
            let z = c * bh[j].norm_sqr();
            loss += lambda * g0(z);
            w[j] = bh[j] * (lambda * g0_prime(z) * c);
        }
        gh += b.b.ad_mul(&w);
        let zh = h.norm_squared() / (2.0 * d);
        let zx = x.norm_squared() / (2.0 * d);
        loss += lambda * (g0(zh) + g0(zx));
        gh += h * Complex64::new(lambda * g0_prime(zh) / (2.0 * d), 0.0);
        gx += x * Complex64::new(lambda * g0_prime(zx) / (2.0 * d), 0.0);
    }
    let nx2 = x.norm_squared();
    let nh2 = h.norm_squared();
    let dh = if nx2 > 0.0 { &gh / Complex64::new(nx2, 0.0) } else { gh.clone() };
    let dx = if nh2 > 0.0 { &gx / Complex64::new(nh2, 0.0) } else { gx.clone() };
    LossEval {
        loss,
        grad: FactorPoint::ComplexPair { h: gh, x: gx },
        direction: FactorPoint::ComplexPair { h: dh, x: dx },
    }
}

/// 1/(4p)‖P_Ω(Γ − XXᵀ − S)‖² and its gradient in X.
pub fn rpca_loss_and_grad(c: &RpcaInstance, x: &Mat, s: &Mat) -> LossEval {
    mc_sym(&c.omega, &c.obs, Some(s), c.p, x)
}
