use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gd::{Outcome, Trace};
use crate::linalg::{max_abs, top_r_svd_robust, unvec, Mat};
use crate::problems::*;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvpConfig {
    pub r: usize,
    /// None: 1 for completion, 1/(1 + δ̂_{2r}) for sensing.
    pub eta: Option<f64>,
    pub max_iters: usize,
    /// Stop once ‖M_t − M⋆‖_∞ ≤ tol.
    pub tol: f64,
    /// Random test matrices for δ̂_{2r}.
    pub rip_trials: usize,
    pub seed: u64,
}

impl Default for SvpConfig {
    fn default() -> Self {
        SvpConfig { r: 1, eta: None, max_iters: 200, tol: 1e-6, rip_trials: 200, seed: 0 }
    }
}

/// M = U diag(s) Vᵀ with r columns.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankIterate {
    pub u: Mat,
    pub s: Vec<f64>,
    pub v: Mat,
}

impl LowRankIterate {
    pub fn zeros(n1: usize, n2: usize, r: usize) -> Self {
        LowRankIterate { u: Mat::zeros(n1, r), s: vec![0.0; r], v: Mat::zeros(n2, r) }
    }

    pub fn to_dense(&self) -> Mat {
        let mut us = self.u.clone();
        for (k, &s) in self.s.iter().enumerate() {
            us.column_mut(k).scale_mut(s);
        }
        us * self.v.transpose()
    }

    /// Number of nonzero singular values.
    pub fn rank(&self) -> usize {
        self.s.iter().filter(|&&s| s > 0.0).count()
    }
}

/// Best rank-r approximation in factored form.
pub fn project_rank(z: &Mat, r: usize) -> Result<LowRankIterate> {
    let (lu, rv) = top_r_svd_robust(z, r, 1e-13)?;
    Ok(LowRankIterate { u: lu.basis, s: lu.values, v: rv.basis })
}

/// (f(M), ∇f(M)) with f = ½‖A(M) − A(M⋆)‖² or (1/2p)‖P_Ω(M − M⋆)‖².
fn objective(inst: &ProblemInstance, m: &Mat) -> (f64, Mat) {
    match inst {
        ProblemInstance::Sensing(s) => {
            let k = s.m as f64;
            let res = sensing_forward(&s.a, m) - &s.y;
            (res.norm_squared() / (2.0 * k), unvec((&s.a * &res).as_slice(), s.n1, s.n2) / k)
        }
        ProblemInstance::Completion(c) => {
            let p = if c.p > 0.0 { c.p } else { 1.0 };
            let mut g = Mat::zeros(c.n1, c.n2);
            let mut f = 0.0;
            for (&(i, j), &o) in c.omega.iter().zip(&c.obs) {
                let res = m[(i, j)] - o;
                f += res * res;
                g[(i, j)] = res / p;
            }
            (f / (2.0 * p), g)
        }
        _ => unreachable!(),
    }
}

/// Singular value projection M_{t+1} = P_r(M_t − η∇f(M_t)) from M₀ = 0.
/// Trace: dist is ‖M_t − M⋆‖_F, incoh is ‖M_t − M⋆‖_∞.
pub fn svp(inst: &ProblemInstance, cfg: &SvpConfig) -> Result<(LowRankIterate, Trace)> {
    let (n1, n2, m_star) = match inst {
        ProblemInstance::Sensing(s) => (s.n1, s.n2, &s.truth.m_star),
        ProblemInstance::Completion(c) => (c.n1, c.n2, &c.truth.m_star),
        _ => return Err(Error::Family("svp is defined for matrix sensing and completion".into())),
    };
    if cfg.r == 0 || cfg.r > n1.min(n2) {
        return invalid(format!("rank {} out of range", cfg.r));
    }
    let eta = match (cfg.eta, inst) {
        (Some(e), _) => e,
        (None, ProblemInstance::Completion(_)) => 1.0,
        (None, _) => {
            let r2 = (2 * cfg.r).min(n1.min(n2));
            1.0 / (1.0 + estimate_rip(inst, r2, cfg.rip_trials, cfg.seed)?.delta_hat)
        }
    };
    if !(eta > 0.0 && eta.is_finite()) {
        return invalid("SVP step must be positive");
    }
    let mut it = LowRankIterate::zeros(n1, n2, cfg.r);
    let mut m = Mat::zeros(n1, n2);
    let mut trace = Trace::new(false);
    let (mut f, mut g) = objective(inst, &m);
    let errs = |m: &Mat| {
        let d = m - m_star;
        (d.norm(), max_abs(&d))
    };
    let (dist, inf) = errs(&m);
    trace.push(0, f, g.norm(), dist, inf);
    if inf <= cfg.tol {
        trace.outcome = Outcome::Converged;
        return Ok((it, trace));
    }
    for t in 1..=cfg.max_iters {
        it = project_rank(&(&m - &g * eta), cfg.r)?;
        m = it.to_dense();
        (f, g) = objective(inst, &m);
        if !f.is_finite() {
            trace.outcome = Outcome::Diverged;
            return Ok((it, trace));
        }
        let (dist, inf) = errs(&m);
        trace.push(t, f, g.norm(), dist, inf);
        if inf <= cfg.tol {
            trace.outcome = Outcome::Converged;
            return Ok((it, trace));
        }
    }
    trace.outcome = Outcome::MaxIters;
    Ok((it, trace))
}
