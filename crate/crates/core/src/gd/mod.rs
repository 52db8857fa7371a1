//! Gradient-descent family: vanilla, projected, truncated, stochastic,
//! robust PCA and Grassmann variants sharing one iteration loop.

mod grassmann;
mod mask;
mod project;
mod rpca;
mod trace;

pub use grassmann::*;
pub use mask::*;
pub use project::*;
pub use rpca::*;
pub use trace::*;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{spectral_norm, Mat, Vector};
use crate::metrics::{incoherence_mu, procrustes, two_to_inf};
use crate::point::FactorPoint;
use crate::problems::*;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Step {
    /// Per-family default, scaled by the spectral-stage norm estimate.
    Default,
    Constant { eta: f64 },
    /// c divided by the same norm estimate the default uses.
    Scaled { c: f64 },
    /// Completion only: 1/(c₁(rκ̂ + log n)²σ̂₁).
    McTheory { c1: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopRule {
    pub grad_tol: Option<f64>,
    /// Absolute distance to truth.
    pub dist_tol: Option<f64>,
    pub loss_tol: Option<f64>,
    /// Stop when |f_t − f_{t−1}| ≤ plateau·f_{t−1}.
    pub plateau: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Variant {
    Vanilla,
    /// Row clipping onto ‖X‖_{2,∞} ≤ √(cμr/n)·‖X₀‖. `mu: None` estimates μ from X₀.
    Projected { c: f64, mu: Option<f64> },
    Twf(TwfThresholds),
    Median { factor: f64 },
    Sgd { batch: usize },
    L1 { radius: f64 },
    SparseK { k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub step: Step,
    pub max_iters: usize,
    pub stop: StopRule,
    pub variant: Variant,
    pub loss: LossSpec,
    /// Hard-threshold constant c of l = ⌈cαnp⌉ (robust PCA).
    pub threshold_c: f64,
    pub seed: u64,
    /// Record wall time per iteration; off keeps traces reproducible.
    pub timing: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            step: Step::Default,
            max_iters: 1000,
            stop: StopRule::default(),
            variant: Variant::Vanilla,
            loss: LossSpec::default(),
            threshold_c: 3.0,
            seed: 0,
            timing: false,
        }
    }
}

pub const DIVERGENCE_FACTOR: f64 = 1e6;
pub const MEDIAN_FACTOR: f64 = 5.0;

impl SolverConfig {
    pub fn with_iters(max_iters: usize) -> Self {
        SolverConfig { max_iters, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        match self.step {
            Step::Constant { eta } if !(eta > 0.0) => return invalid("step size must be positive"),
            Step::Scaled { c } if !(c > 0.0) => return invalid("step constant must be positive"),
            Step::McTheory { c1 } if !(c1 > 0.0) => return invalid("c1 must be positive"),
            _ => {}
        }
        match self.variant {
            Variant::Projected { c, mu } => {
                if !(c > 0.0) || mu.is_some_and(|m| !(m > 0.0)) {
                    return invalid("projection constants must be positive");
                }
            }
            Variant::Twf(t) => t.validate()?,
            Variant::Median { factor } if !(factor > 0.0) => return invalid("median factor must be positive"),
            Variant::Sgd { batch } if batch == 0 => return invalid("batch size must be at least 1"),
            Variant::L1 { radius } if !(radius >= 0.0) => return invalid("l1 radius must be nonnegative"),
            _ => {}
        }
        if !(self.threshold_c > 0.0) {
            return invalid("threshold constant must be positive");
        }
        Ok(())
    }
}

/// Norm estimate the default step is divided by, and the default constant.
fn step_scale(inst: &ProblemInstance, init: &FactorPoint, loss: &LossSpec) -> (f64, f64) {
    match (inst, init) {
        (ProblemInstance::Sensing(_), FactorPoint::Sym(x)) => (spectral_norm(x).powi(2), 1.0 / 3.0),
        (ProblemInstance::Sensing(_), FactorPoint::Asym { l, r }) => (spectral_norm(l) * spectral_norm(r), 1.0 / 3.0),
        (ProblemInstance::PhaseRetrieval(_), FactorPoint::Vector(x)) => match loss.kind {
            LossKind::Amplitude => (1.0, 0.5),
            _ => (x.norm_squared(), 0.1),
        },
        (ProblemInstance::QuadraticSensing(_), FactorPoint::Sym(x)) => (x.norm_squared(), 0.1),
        (ProblemInstance::Completion(_) | ProblemInstance::RobustPca(_), FactorPoint::Sym(x)) => {
            (spectral_norm(x).powi(2), 0.25)
        }
        (ProblemInstance::Completion(_) | ProblemInstance::RobustPca(_), FactorPoint::Asym { l, r }) => {
            (spectral_norm(l) * spectral_norm(r), 0.25)
        }
        (ProblemInstance::BlindDeconv(_), _) => (1.0, 0.1),
        _ => (1.0, 0.1),
    }
}

/// Resolved constant step size for a run started at `init`.
pub fn resolve_step(inst: &ProblemInstance, init: &FactorPoint, cfg: &SolverConfig) -> Result<f64> {
    let (scale, c0) = step_scale(inst, init, &cfg.loss);
    let scale = if scale > 0.0 && scale.is_finite() { scale } else { 1.0 };
    let eta = match cfg.step {
        Step::Default => c0 / scale,
        Step::Constant { eta } => eta,
        Step::Scaled { c } => c / scale,
        Step::McTheory { c1 } => {
            let ProblemInstance::Completion(c) = inst else {
                return Err(Error::Family("theory step is defined for matrix completion".into()));
            };
            let (sv, n) = match init {
                FactorPoint::Sym(x) => (crate::linalg::svd(&(x * x.transpose())).s, c.n1),
                FactorPoint::Asym { l, r } => (crate::linalg::svd(&(l * r.transpose())).s, c.n1.max(c.n2)),
                _ => return Err(Error::Shape("completion init".into())),
            };
            let r = c.r;
            let s1 = sv[0];
            let sr = sv[r - 1].max(f64::MIN_POSITIVE);
            let kappa = s1 / sr;
            let d = r as f64 * kappa + (n as f64).ln();
            1.0 / (c1 * d * d * s1)
        }
    };
    if !(eta > 0.0) || !eta.is_finite() {
        return invalid(format!("resolved step size {eta} is not positive"));
    }
    Ok(eta)
}

/// Per-iteration incoherence proxy: max_i |a_iᵀ(x − x⋆)| for phase retrieval,
/// ‖XH − X⋆‖_{2,∞} for completion and robust PCA, 0 elsewhere.
pub fn incoherence_proxy(inst: &ProblemInstance, point: &FactorPoint) -> f64 {
    match (inst, point) {
        (ProblemInstance::PhaseRetrieval(p), FactorPoint::Vector(x)) => {
            let s = if (x - &p.x_star).norm() <= (x + &p.x_star).norm() { 1.0 } else { -1.0 };
            let d = x - &p.x_star * s;
            (&p.a * d).amax()
        }
        (ProblemInstance::Completion(c), FactorPoint::Sym(x)) => aligned_two_inf(x, &c.truth.l),
        (ProblemInstance::RobustPca(c), FactorPoint::Sym(x)) => aligned_two_inf(x, &c.truth.l),
        (ProblemInstance::Completion(c), FactorPoint::Asym { l, r }) => {
            let x = stack(l, r);
            let xs = stack(&c.truth.l, &c.truth.r);
            aligned_two_inf(&x, &xs)
        }
        _ => 0.0,
    }
}

fn stack(l: &Mat, r: &Mat) -> Mat {
    let mut x = Mat::zeros(l.nrows() + r.nrows(), l.ncols());
    x.rows_mut(0, l.nrows()).copy_from(l);
    x.rows_mut(l.nrows(), r.nrows()).copy_from(r);
    x
}

fn aligned_two_inf(x: &Mat, xs: &Mat) -> f64 {
    match procrustes(x, xs) {
        Ok(h) => two_to_inf(&(x * h - xs)),
        Err(_) => f64::NAN,
    }
}

/// Projection applied after each step, built once from the initial point.
#[derive(Debug, Clone)]
pub(crate) enum Projection {
    None,
    Incoherent { bounds: (f64, f64) },
    L1(f64),
    SparseK(usize),
}

impl Projection {
    pub(crate) fn build(variant: &Variant, init: &FactorPoint, rank: usize) -> Result<Projection> {
        Ok(match *variant {
            Variant::Projected { c, mu } => {
                let bound = |x: &Mat| -> Result<f64> {
                    let mu = match mu {
                        Some(m) => m,
                        None => incoherence_mu(&(x * x.transpose()), rank)?,
                    };
                    Ok((c * mu * rank as f64 / x.nrows() as f64).sqrt() * spectral_norm(x))
                };
                match init {
                    FactorPoint::Sym(x) => {
                        let b = bound(x)?;
                        Projection::Incoherent { bounds: (b, b) }
                    }
                    FactorPoint::Asym { l, r } => Projection::Incoherent { bounds: (bound(l)?, bound(r)?) },
                    _ => return Err(Error::Family("incoherence projection needs a matrix factor".into())),
                }
            }
            Variant::L1 { radius } => Projection::L1(radius),
            Variant::SparseK { k } => Projection::SparseK(k),
            _ => Projection::None,
        })
    }

    pub(crate) fn apply(&self, x: &mut FactorPoint) {
        match (self, x) {
            (Projection::Incoherent { bounds }, FactorPoint::Sym(m)) => clip_rows(m, bounds.0),
            (Projection::Incoherent { bounds }, FactorPoint::Asym { l, r }) => {
                clip_rows(l, bounds.0);
                clip_rows(r, bounds.1);
            }
            (Projection::L1(radius), FactorPoint::Vector(v)) => *v = project_l1(v, *radius),
            (Projection::SparseK(k), FactorPoint::Vector(v)) => *v = project_sparse_k(v, *k),
            _ => {}
        }
    }
}

fn rank_of(inst: &ProblemInstance) -> usize {
    match inst {
        ProblemInstance::Sensing(s) => s.r,
        ProblemInstance::QuadraticSensing(q) => q.r,
        ProblemInstance::Completion(c) => c.r,
        ProblemInstance::RobustPca(c) => c.r,
        _ => 1,
    }
}

/// Gradient oracle for one iteration of the configured variant.
fn evaluate(inst: &ProblemInstance, x: &FactorPoint, cfg: &SolverConfig, rng: &mut Rng) -> Result<LossEval> {
    let pr = || match inst {
        ProblemInstance::PhaseRetrieval(p) => Ok(p),
        _ => Err(Error::Family("truncated and stochastic variants are defined for phase retrieval".into())),
    };
    let vec = || match x {
        FactorPoint::Vector(v) => Ok(v),
        _ => Err(Error::Shape(format!("{} point for phase retrieval", x.kind()))),
    };
    match cfg.variant {
        Variant::Twf(th) => {
            let (p, v) = (pr()?, vec()?);
            let m = twf_mask(p, v, &th);
            Ok(pr_intensity(p, v, Some(&m)))
        }
        Variant::Median { factor } => {
            let (p, v) = (pr()?, vec()?);
            let m = median_mask(p, v, factor);
            Ok(pr_intensity(p, v, Some(&m)))
        }
        Variant::Sgd { batch } => {
            let (p, v) = (pr()?, vec()?);
            if batch > p.m {
                return invalid(format!("batch {batch} exceeds m = {}", p.m));
            }
            let mut m = vec![false; p.m];
            for i in rng.sample_without_replacement(p.m, batch) {
                m[i] = true;
            }
            Ok(pr_intensity(p, v, Some(&m)))
        }
        _ => loss_and_grad(inst, x, &cfg.loss),
    }
}

/// Iterate x_{t+1} = P(x_t − η·d(x_t)) with the configured variant.
pub fn run_gd(inst: &ProblemInstance, init: &FactorPoint, cfg: &SolverConfig) -> Result<(FactorPoint, Trace)> {
    cfg.validate()?;
    let eta = resolve_step(inst, init, cfg)?;
    let proj = Projection::build(&cfg.variant, init, rank_of(inst))?;
    let mut rng = Rng::new(cfg.seed);
    let mut x = init.clone();
    let mut trace = Trace::new(cfg.timing);
    let mut ev = evaluate(inst, &x, cfg, &mut rng)?;
    if !x.shape_matches(&ev.grad) {
        return Err(Error::Shape("init shape does not match the instance".into()));
    }
    let loss0 = ev.loss;
    trace.push(0, ev.loss, ev.grad.norm(), inst.dist_to_truth(&x)?, incoherence_proxy(inst, &x));
    if stop_now(&cfg.stop, &trace, None) {
        trace.outcome = Outcome::Converged;
        return Ok((x, trace));
    }
    for t in 1..=cfg.max_iters {
        let prev_loss = ev.loss;
        let mut next = x.clone();
        next.axpy(-eta, &ev.direction)?;
        proj.apply(&mut next);
        if !next.is_finite() {
            trace.outcome = Outcome::Diverged;
            return Ok((x, trace));
        }
        let e = evaluate(inst, &next, cfg, &mut rng)?;
        if !e.loss.is_finite() || (loss0 > 0.0 && e.loss > DIVERGENCE_FACTOR * loss0) {
            trace.outcome = Outcome::Diverged;
            return Ok((next, trace));
        }
        x = next;
        ev = e;
        let dist = inst.dist_to_truth(&x)?;
        trace.push(t, ev.loss, ev.grad.norm(), dist, incoherence_proxy(inst, &x));
        if stop_now(&cfg.stop, &trace, Some(prev_loss)) {
            trace.outcome = Outcome::Converged;
            return Ok((x, trace));
        }
    }
    trace.outcome = Outcome::MaxIters;
    Ok((x, trace))
}

pub(crate) fn stop_now(stop: &StopRule, trace: &Trace, prev_loss: Option<f64>) -> bool {
    let Some(row) = trace.rows.last() else { return false };
    if stop.grad_tol.is_some_and(|g| row.grad_norm <= g) {
        return true;
    }
    if stop.dist_tol.is_some_and(|d| row.dist <= d) {
        return true;
    }
    if stop.loss_tol.is_some_and(|l| row.loss <= l) {
        return true;
    }
    if let (Some(p), Some(prev)) = (stop.plateau, prev_loss) {
        if (row.loss - prev).abs() <= p * prev.abs() {
            return true;
        }
    }
    false
}

/// Truncated gradient descent; the config must carry a TWF or median mask.
pub fn run_truncated_gd(inst: &ProblemInstance, init: &FactorPoint, cfg: &SolverConfig) -> Result<(FactorPoint, Trace)> {
    match cfg.variant {
        Variant::Twf(_) | Variant::Median { .. } => run_gd(inst, init, cfg),
        _ => invalid("run_truncated_gd needs a twf or median variant"),
    }
}

/// x − (η/m)Σ_{i∈Ω_t}∇f_i(x) with |Ω_t| = k drawn uniformly without replacement.
pub fn sgd_step(inst: &ProblemInstance, x: &Vector, k: usize, eta: f64, rng: &mut Rng) -> Result<Vector> {
    let ProblemInstance::PhaseRetrieval(p) = inst else {
        return Err(Error::Family("sgd_step is defined for phase retrieval".into()));
    };
    if k == 0 || k > p.m {
        return invalid(format!("batch size {k} outside 1..={}", p.m));
    }
    if x.len() != p.n {
        return Err(Error::Shape("sgd point length".into()));
    }
    let mut mask = vec![false; p.m];
    for i in rng.sample_without_replacement(p.m, k) {
        mask[i] = true;
    }
    let ev = pr_intensity(p, x, Some(&mask));
    let FactorPoint::Vector(g) = ev.grad else { unreachable!() };
    Ok(x - g * eta)
}
