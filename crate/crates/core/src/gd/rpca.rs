use super::*;
use crate::spectral::{hard_threshold, rpca_threshold_count, scatter};

/// S = H_l(P_Ω(Γ − XXᵀ)).
pub fn rpca_sparse_update(c: &RpcaInstance, x: &Mat, l: usize) -> Mat {
    let xt = x.transpose();
    let resid: Vec<f64> =
        c.omega.iter().zip(&c.obs).map(|(&(i, j), &o)| o - xt.column(i).dot(&xt.column(j))).collect();
    hard_threshold(&scatter(c.n1, c.n2, &c.omega, &resid), l)
}

/// Alternates the hard-thresholded outlier estimate with a (projected)
/// gradient step on X. PSD instances only.
pub fn run_rpca(inst: &ProblemInstance, init: &FactorPoint, s_init: &Mat, cfg: &SolverConfig) -> Result<(FactorPoint, Mat, Trace)> {
    cfg.validate()?;
    let ProblemInstance::RobustPca(c) = inst else {
        return Err(Error::Family("run_rpca needs a robust PCA instance".into()));
    };
    if !c.symmetric {
        return Err(Error::Family("the robust PCA solver handles square PSD instances".into()));
    }
    let FactorPoint::Sym(x0) = init else {
        return Err(Error::Shape(format!("{} point for robust PCA", init.kind())));
    };
    if x0.nrows() != c.n1 || s_init.shape() != (c.n1, c.n2) {
        return Err(Error::Shape("robust PCA init dimensions".into()));
    }
    let eta = resolve_step(inst, init, cfg)?;
    let proj = Projection::build(&cfg.variant, init, c.r)?;
    let l = if c.alpha > 0.0 { rpca_threshold_count(c, cfg.threshold_c) } else { 0 };
    let mut x = x0.clone();
    let mut s = s_init.clone();
    let mut trace = Trace::new(cfg.timing);
    let ev = rpca_loss_and_grad(c, &x, &s);
    let loss0 = ev.loss;
    let fp = |x: &Mat| FactorPoint::Sym(x.clone());
    trace.push(0, ev.loss, ev.grad.norm(), inst.dist_to_truth(&fp(&x))?, incoherence_proxy(inst, &fp(&x)));
    let mut prev = ev.loss;
    for t in 1..=cfg.max_iters {
        s = rpca_sparse_update(c, &x, l);
        let ev = rpca_loss_and_grad(c, &x, &s);
        let mut next = FactorPoint::Sym(x.clone());
        next.axpy(-eta, &ev.grad)?;
        proj.apply(&mut next);
        let FactorPoint::Sym(xn) = next else { unreachable!() };
        let after = rpca_loss_and_grad(c, &xn, &s);
        if !xn.iter().all(|v| v.is_finite()) || !after.loss.is_finite() || (loss0 > 0.0 && after.loss > DIVERGENCE_FACTOR * loss0) {
            trace.outcome = Outcome::Diverged;
            return Ok((FactorPoint::Sym(x), s, trace));
        }
        x = xn;
        let p = fp(&x);
        trace.push(t, after.loss, after.grad.norm(), inst.dist_to_truth(&p)?, incoherence_proxy(inst, &p));
        if stop_now(&cfg.stop, &trace, Some(prev)) {
            trace.outcome = Outcome::Converged;
            return Ok((p, s, trace));
        }
        prev = after.loss;
    }
    trace.outcome = Outcome::MaxIters;
    Ok((FactorPoint::Sym(x), s, trace))
}

/// Fraction of the estimated support that is truly corrupted (1 for an empty estimate).
/// Entries with |s| ≤ rel_tol·max|s_hat| count as zero, since exact recovery leaves
/// round-off residue on clean entries that H_l may keep.
pub fn support_precision(s_hat: &Mat, s_star: &Mat, rel_tol: f64) -> f64 {
    let cut = rel_tol * s_hat.amax();
    let mut hit = 0usize;
    let mut total = 0usize;
    for (a, b) in s_hat.iter().zip(s_star.iter()) {
        if a.abs() > cut {
            total += 1;
            if *b != 0.0 {
                hit += 1;
            }
        }
    }
    if total == 0 {
        1.0
    } else {
        hit as f64 / total as f64
    }
}
