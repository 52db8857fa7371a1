use serde::{Deserialize, Serialize};

use super::lstsq;
use crate::error::{invalid, Error, Result};
use crate::gd::{stop_now, Outcome, StopRule, Trace};
use crate::linalg::{max_abs, unvec, Mat, Vector};
use crate::point::FactorPoint;
use crate::problems::*;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum AltMinVariant {
    #[default]
    Reuse,
    /// Samples split round-robin into `parts` disjoint pieces; outer iteration t
    /// uses piece (t − 1) mod parts for both half-steps.
    SampleSplit { parts: usize },
    /// Completion only. Adds λG₀ penalties on ‖L‖_F², ‖R‖_F² and the row norms,
    /// with levels set to twice the corresponding norms of L₀.
    Regularized { lambda: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AltMinConfig {
    pub max_outer: usize,
    /// Inner gradient tolerance of the regularized half-steps, relative to the first inner gradient.
    pub inner_tol: f64,
    pub variant: AltMinVariant,
    pub stop: StopRule,
}

impl Default for AltMinConfig {
    fn default() -> Self {
        AltMinConfig { max_outer: 50, inner_tol: 1e-10, variant: AltMinVariant::Reuse, stop: StopRule::default() }
    }
}

impl AltMinConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_outer == 0 {
            return invalid("max_outer must be at least 1");
        }
        if !(self.inner_tol > 0.0) {
            return invalid("inner tolerance must be positive");
        }
        match self.variant {
            AltMinVariant::SampleSplit { parts: 0 } => invalid("sample split needs at least one part"),
            AltMinVariant::Regularized { lambda } if !(lambda >= 0.0 && lambda.is_finite()) => {
                invalid("regularization weight must be finite and nonnegative")
            }
            _ => Ok(()),
        }
    }
}

fn parts_of(n: usize, variant: &AltMinVariant) -> Vec<Vec<usize>> {
    let t = match *variant {
        AltMinVariant::SampleSplit { parts } => parts,
        _ => 1,
    };
    let mut out = vec![Vec::new(); t];
    for k in 0..n {
        out[k % t].push(k);
    }
    out
}

/// Trace columns for the matrix-valued direct solvers: `incoh` holds ‖LRᵀ − M⋆‖_∞.
fn entry_err(lr: &Mat, m_star: &Mat) -> (f64, f64) {
    let d = lr - m_star;
    (d.norm(), max_abs(&d))
}

// ---------------------------------------------------------------- sensing

fn sensing_eval(s: &SensingInstance, l: &Mat, r: &Mat) -> (f64, f64, f64, f64) {
    let m = s.m as f64;
    let lr = l * r.transpose();
    let res = sensing_forward(&s.a, &lr) - &s.y;
    let g = unvec((&s.a * &res).as_slice(), s.n1, s.n2) / m;
    let grad = ((&g * r).norm_squared() + (g.transpose() * l).norm_squared()).sqrt();
    let (dist, inf) = entry_err(&lr, &s.truth.m_star);
    (res.norm_squared() / (2.0 * m), grad, dist, inf)
}

/// Least squares for R (left = false, L fixed) or L (left = true, R fixed)
/// over the measurements in `idx`.
fn sensing_half_step(s: &SensingInstance, fixed: &Mat, idx: &[usize], left: bool) -> Result<Mat> {
    let r = fixed.ncols();
    let rows = if left { s.n1 } else { s.n2 };
    let mut g = Mat::zeros(idx.len(), rows * r);
    let mut b = Vector::zeros(idx.len());
    for (k, &i) in idx.iter().enumerate() {
        let ai = s.sensing_matrix(i);
        let coef = if left { &ai * fixed } else { ai.tr_mul(fixed) };
        g.row_mut(k).copy_from_slice(coef.as_slice());
        b[k] = s.y[i];
    }
    let what = if left { "L half-step" } else { "R half-step" };
    Ok(unvec(lstsq(&g, &b, what)?.as_slice(), rows, r))
}

/// R_t = argmin_R ‖A(L_{t−1}Rᵀ) − y‖², L_t = argmin_L ‖A(LR_tᵀ) − y‖².
/// Row 0 is (L₀, R = 0); row k is the state after k half-steps.
pub fn altmin_sensing(inst: &ProblemInstance, l0: &Mat, cfg: &AltMinConfig) -> Result<(Mat, Mat, Trace)> {
    cfg.validate()?;
    let s = match inst {
        ProblemInstance::Sensing(s) if !s.symmetric => s,
        _ => return Err(Error::Family("altmin_sensing needs an asymmetric matrix sensing instance".into())),
    };
    if l0.nrows() != s.n1 || l0.ncols() == 0 {
        return Err(Error::Shape(format!("L0 is {}x{}, expected {}xr", l0.nrows(), l0.ncols(), s.n1)));
    }
    if matches!(cfg.variant, AltMinVariant::Regularized { .. }) {
        return Err(Error::Family("regularized alternating minimization is defined for completion".into()));
    }
    let parts = parts_of(s.m, &cfg.variant);
    let mut l = l0.clone();
    let mut r = Mat::zeros(s.n2, l0.ncols());
    let mut trace = Trace::new(false);
    let (loss, grad, dist, inf) = sensing_eval(s, &l, &r);
    trace.push(0, loss, grad, dist, inf);
    let mut step = 0;
    for t in 0..cfg.max_outer {
        let idx = &parts[t % parts.len()];
        for left in [false, true] {
            let prev = trace.last().map(|row| row.loss);
            if left {
                l = sensing_half_step(s, &r, idx, true)?;
            } else {
                r = sensing_half_step(s, &l, idx, false)?;
            }
            step += 1;
            let (loss, grad, dist, inf) = sensing_eval(s, &l, &r);
            if matches!(cfg.variant, AltMinVariant::Reuse) {
                debug_assert!(prev.is_none_or(|p| loss <= p * (1.0 + 1e-9) + 1e-24), "half-step increased the loss");
            }
            trace.push(step, loss, grad, dist, inf);
            if stop_now(&cfg.stop, &trace, prev) {
                trace.outcome = Outcome::Converged;
                return Ok((l, r, trace));
            }
        }
    }
    trace.outcome = Outcome::MaxIters;
    Ok((l, r, trace))
}

// ------------------------------------------------------------- completion

#[derive(Debug, Clone, Copy)]
struct RegLevels {
    lambda: f64,
    alpha: [f64; 4],
}

impl RegLevels {
    fn from_init(l0: &Mat, n1: usize, n2: usize, lambda: f64) -> Result<Self> {
        let fro = l0.norm_squared();
        let row = (0..l0.nrows()).map(|i| l0.row(i).norm_squared()).fold(0.0, f64::max);
        if fro == 0.0 || row == 0.0 {
            return invalid("regularized alternating minimization needs a nonzero L0");
        }
        let a1 = 1.0 / (4.0 * fro);
        let a3 = 1.0 / (4.0 * row);
        Ok(RegLevels { lambda, alpha: [a1, a1, a3, a3 * n2 as f64 / n1 as f64] })
    }

    /// Penalty on L (left) or R, with its gradient added to `g`.
    fn penalty(&self, x: &Mat, left: bool, g: &mut Mat) -> f64 {
        let (af, arow) = if left { (self.alpha[0], self.alpha[2]) } else { (self.alpha[1], self.alpha[3]) };
        mc_reg(x, self.lambda, af, arow, g)
    }
}

/// Observed entries grouped by column (free factor R) or by row (free factor L),
/// restricted to the omega indices in `idx`.
fn groups(c: &McInstance, idx: &[usize], left: bool) -> Vec<Vec<(usize, f64)>> {
    let mut out = vec![Vec::new(); if left { c.n1 } else { c.n2 }];
    for &k in idx {
        let (i, j) = c.omega[k];
        let o = c.obs[k];
        if left {
            out[i].push((j, o));
        } else {
            out[j].push((i, o));
        }
    }
    out
}

/// (1/2p)‖P_Ω(LRᵀ) − obs‖² plus the penalty, its gradient, and the truth errors.
fn mc_eval(c: &McInstance, l: &Mat, r: &Mat, reg: Option<&RegLevels>) -> (f64, f64, f64, f64) {
    let rank = l.ncols();
    let p = if c.p > 0.0 { c.p } else { 1.0 };
    let mut gl = Mat::zeros(c.n1, rank);
    let mut gr = Mat::zeros(c.n2, rank);
    let mut loss = 0.0;
    for (&(i, j), &o) in c.omega.iter().zip(&c.obs) {
        let res = l.row(i).dot(&r.row(j)) - o;
        loss += res * res;
        for k in 0..rank {
            gl[(i, k)] += res * r[(j, k)] / p;
            gr[(j, k)] += res * l[(i, k)] / p;
        }
    }
    loss /= 2.0 * p;
    if let Some(reg) = reg {
        loss += reg.penalty(l, true, &mut gl) + reg.penalty(r, false, &mut gr);
    }
    let lr = l * r.transpose();
    let (dist, inf) = entry_err(&lr, &c.truth.m_star);
    (loss, (gl.norm_squared() + gr.norm_squared()).sqrt(), dist, inf)
}

/// Row-decoupled least squares for the free factor.
fn mc_lsq(groups: &[Vec<(usize, f64)>], fixed: &Mat, left: bool) -> Result<Mat> {
    let r = fixed.ncols();
    let what = if left { "row" } else { "column" };
    let mut out = Mat::zeros(groups.len(), r);
    for (idx, entries) in groups.iter().enumerate() {
        if entries.len() < r {
            return Err(Error::Singular(format!(
                "{what} {idx} has {} observations, fewer than r = {r}",
                entries.len()
            )));
        }
        let mut g = Mat::zeros(entries.len(), r);
        let mut b = Vector::zeros(entries.len());
        for (k, &(other, o)) in entries.iter().enumerate() {
            g.row_mut(k).copy_from(&fixed.row(other));
            b[k] = o;
        }
        let z = lstsq(&g, &b, &format!("least squares for {what} {idx}"))?;
        out.row_mut(idx).copy_from(&z.transpose());
    }
    Ok(out)
}

/// φ(X) = (1/2p)Σ(⟨X_a, F_b⟩ − o)² + penalty(X) over the grouped entries.
fn reg_objective(groups: &[Vec<(usize, f64)>], fixed: &Mat, x: &Mat, p: f64, reg: &RegLevels, left: bool) -> (f64, Mat) {
    let mut g = Mat::zeros(x.nrows(), x.ncols());
    let mut val = 0.0;
    for (a, entries) in groups.iter().enumerate() {
        for &(b, o) in entries {
            let res = x.row(a).dot(&fixed.row(b)) - o;
            val += res * res;
            let mut ga = g.row_mut(a);
            ga += fixed.row(b) * (res / p);
        }
    }
    val /= 2.0 * p;
    val += reg.penalty(x, left, &mut g);
    (val, g)
}

/// Exact least squares, then backtracking gradient descent on the convex
/// penalized half-step objective if the penalty is active there.
fn mc_reg_half_step(
    groups: &[Vec<(usize, f64)>],
    fixed: &Mat,
    p: f64,
    reg: &RegLevels,
    left: bool,
    inner_tol: f64,
) -> Result<Mat> {
    let mut x = mc_lsq(groups, fixed, left)?;
    let mut pen_g = Mat::zeros(x.nrows(), x.ncols());
    reg.penalty(&x, left, &mut pen_g);
    if reg.lambda == 0.0 || pen_g.norm() == 0.0 {
        return Ok(x);
    }
    let curv = groups
        .iter()
        .map(|e| e.iter().map(|&(b, _)| fixed.row(b).norm_squared()).sum::<f64>())
        .fold(0.0, f64::max)
        / p;
    let mut t = 1.0 / curv.max(f64::MIN_POSITIVE);
    let (mut val, mut g) = reg_objective(groups, fixed, &x, p, reg, left);
    let g0 = g.norm();
    for _ in 0..10_000 {
        let gn2 = g.norm_squared();
        if gn2.sqrt() <= inner_tol * g0 {
            break;
        }
        loop {
            let cand = &x - &g * t;
            let (cv, cg) = reg_objective(groups, fixed, &cand, p, reg, left);
            if cv <= val - 0.5 * t * gn2 {
                x = cand;
                val = cv;
                g = cg;
                t *= 2.0;
                break;
            }
            t *= 0.5;
            if t < 1e-300 {
                return Ok(x);
            }
        }
    }
    Ok(x)
}

/// Alternating least squares over the observed entries. Row 0 is (L₀, R = 0);
/// row k is the state after k half-steps.
pub fn altmin_mc(inst: &ProblemInstance, l0: &Mat, cfg: &AltMinConfig) -> Result<(Mat, Mat, Trace)> {
    cfg.validate()?;
    let ProblemInstance::Completion(c) = inst else {
        return Err(Error::Family("altmin_mc needs a matrix completion instance".into()));
    };
    if l0.nrows() != c.n1 || l0.ncols() == 0 {
        return Err(Error::Shape(format!("L0 is {}x{}, expected {}xr", l0.nrows(), l0.ncols(), c.n1)));
    }
    let reg = match cfg.variant {
        AltMinVariant::Regularized { lambda } => Some(RegLevels::from_init(l0, c.n1, c.n2, lambda)?),
        _ => None,
    };
    let p = if c.p > 0.0 { c.p } else { 1.0 };
    let parts = parts_of(c.omega.len(), &cfg.variant);
    let mut l = l0.clone();
    let mut r = Mat::zeros(c.n2, l0.ncols());
    let mut trace = Trace::new(false);
    let (loss, grad, dist, inf) = mc_eval(c, &l, &r, reg.as_ref());
    trace.push(0, loss, grad, dist, inf);
    let mut step = 0;
    for t in 0..cfg.max_outer {
        let idx = &parts[t % parts.len()];
        for left in [false, true] {
            let prev = trace.last().map(|row| row.loss);
            let gr = groups(c, idx, left);
            let fixed = if left { &r } else { &l };
            let next = match &reg {
                Some(reg) => mc_reg_half_step(&gr, fixed, p, reg, left, cfg.inner_tol)?,
                None => mc_lsq(&gr, fixed, left)?,
            };
            if left {
                l = next;
            } else {
                r = next;
            }
            step += 1;
            let (loss, grad, dist, inf) = mc_eval(c, &l, &r, reg.as_ref());
            if matches!(cfg.variant, AltMinVariant::Reuse) {
                debug_assert!(prev.is_none_or(|p| loss <= p * (1.0 + 1e-9) + 1e-24), "half-step increased the loss");
            }
            trace.push(step, loss, grad, dist, inf);
            if stop_now(&cfg.stop, &trace, prev) {
                trace.outcome = Outcome::Converged;
                return Ok((l, r, trace));
            }
        }
    }
    trace.outcome = Outcome::MaxIters;
    Ok((l, r, trace))
}

// ------------------------------------------------------------- phase retrieval

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErConfig {
    pub max_iters: usize,
    pub stop: StopRule,
}

impl Default for ErConfig {
    fn default() -> Self {
        ErConfig { max_iters: 100, stop: StopRule::default() }
    }
}

/// Sign with sgn(0) = +1.
pub fn sgn_plus(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Error reduction: b_t = sgn(Ax_{t−1}), x_t = A†(b_t ∘ √y). Trace loss is the amplitude loss.
pub fn er_phase_retrieval(inst: &ProblemInstance, x0: &Vector, cfg: &ErConfig) -> Result<(Vector, Trace)> {
    let ProblemInstance::PhaseRetrieval(p) = inst else {
        return Err(Error::Family("error reduction is defined for phase retrieval".into()));
    };
    if x0.len() != p.n {
        return Err(Error::Shape(format!("x0 has length {}, expected {}", x0.len(), p.n)));
    }
    if p.m < p.n {
        return Err(Error::Singular(format!("{} measurements for {} unknowns", p.m, p.n)));
    }
    let qr = p.a.clone().qr();
    let (q, rr) = (qr.q(), qr.r());
    let dmax = (0..p.n).map(|i| rr[(i, i)].abs()).fold(0.0, f64::max);
    if dmax == 0.0 || (0..p.n).any(|i| rr[(i, i)].abs() <= super::RANK_TOL * dmax) {
        return Err(Error::Singular("design matrix is rank deficient".into()));
    }
    let amp: Vector = p.y.map(|v| v.max(0.0).sqrt());
    let spec = LossSpec::amplitude();
    let record = |trace: &mut Trace, t: usize, x: &Vector| -> Result<()> {
        let pt = FactorPoint::Vector(x.clone());
        let ev = loss_and_grad(inst, &pt, &spec)?;
        trace.push(t, ev.loss, ev.grad.norm(), inst.dist_to_truth(&pt)?, crate::gd::incoherence_proxy(inst, &pt));
        Ok(())
    };
    let mut x = x0.clone();
    let mut trace = Trace::new(false);
    record(&mut trace, 0, &x)?;
    if stop_now(&cfg.stop, &trace, None) {
        trace.outcome = Outcome::Converged;
        return Ok((x, trace));
    }
    for t in 1..=cfg.max_iters {
        let prev = trace.last().map(|row| row.loss);
        let ax = &p.a * &x;
        let target = Vector::from_iterator(p.m, ax.iter().zip(amp.iter()).map(|(&v, &s)| sgn_plus(v) * s));
        x = rr
            .solve_upper_triangular(&q.tr_mul(&target))
            .ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
        record(&mut trace, t, &x)?;
        if stop_now(&cfg.stop, &trace, prev) {
            trace.outcome = Outcome::Converged;
            return Ok((x, trace));
        }
    }
    trace.outcome = Outcome::MaxIters;
    Ok((x, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_robin_parts() {
        let parts = parts_of(7, &AltMinVariant::SampleSplit { parts: 3 });
        assert_eq!(parts, vec![vec![0, 3, 6], vec![1, 4], vec![2, 5]]);
        assert_eq!(parts_of(3, &AltMinVariant::Reuse), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn sgn_zero_is_plus() {
        assert_eq!(sgn_plus(0.0), 1.0);
        assert_eq!(sgn_plus(-0.0), 1.0);
        assert_eq!(sgn_plus(-2.0), -1.0);
    }

    #[test]
    fn sparse_column_is_named() {
        let mut inst = match gen_matrix_completion(6, 5, 2, 1.0, false, 3).unwrap() {
            ProblemInstance::Completion(c) => c,
            _ => unreachable!(),
        };
        let keep: Vec<usize> = (0..inst.omega.len()).filter(|&k| inst.omega[k].1 != 4 || inst.omega[k].0 == 0).collect();
        inst.omega = keep.iter().map(|&k| inst.omega[k]).collect();
        inst.obs = keep.iter().map(|&k| inst.obs[k]).collect();
        let l0 = inst.truth.l.clone();
        let err = altmin_mc(&ProblemInstance::Completion(inst), &l0, &AltMinConfig::default()).unwrap_err();
        assert!(err.to_string().contains("column 4"), "{err}");
    }
}
