use serde::{Deserialize, Serialize};

use super::Objective;
use crate::error::{invalid, Error, Result};
use crate::gd::{Outcome, StopRule, Trace};
use crate::linalg::{dense_eigen, Mat, Vector};
use crate::rng::Rng;

/// Largest dimension the dense second-order steps accept.
pub const MAX_DENSE_DIM: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SaddleClauses {
    pub strong_gradient: bool,
    pub negative_curvature: bool,
    pub near_minimum: bool,
}

impl SaddleClauses {
    pub fn any(&self) -> bool {
        self.strong_gradient || self.negative_curvature || self.near_minimum
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleReport {
    pub clauses: SaddleClauses,
    pub grad_norm: f64,
    pub lambda_min: f64,
    /// Distance to the closest listed minimum, ∞ when none is given.
    pub min_dist: f64,
}

impl SaddleReport {
    pub fn violated(&self) -> bool {
        !self.clauses.any()
    }
}

/// Which of ‖∇f‖ ≥ ε, λ_min(∇²f) ≤ −γ, min_k ‖x − x_k‖ ≤ ζ hold at x.
pub fn strict_saddle_check(
    obj: &dyn Objective,
    x: &Vector,
    eps: f64,
    gamma: f64,
    zeta: f64,
    minima: &[Vector],
) -> Result<SaddleReport> {
    if !(eps > 0.0 && gamma > 0.0 && zeta > 0.0) {
        return invalid("ε, γ and ζ must be positive");
    }
    if x.len() != obj.dim() {
        return Err(Error::Shape(format!("x has length {}, objective has dimension {}", x.len(), obj.dim())));
    }
    let grad_norm = obj.gradient(x).norm();
    let (vals, _) = dense_eigen(&obj.hessian(x));
    let lambda_min = *vals.last().unwrap_or(&0.0);
    let min_dist = minima.iter().map(|m| (x - m).norm()).fold(f64::INFINITY, f64::min);
    let clauses = SaddleClauses {
        strong_gradient: grad_norm >= eps,
        negative_curvature: lambda_min <= -gamma,
        near_minimum: min_dist <= zeta,
    };
    Ok(SaddleReport { clauses, grad_norm, lambda_min, min_dist })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaddleEscapeConfig {
    pub eta: f64,
    /// Radius of the sphere the perturbation is drawn from.
    pub radius: f64,
    /// Perturb when ‖∇f‖ ≤ g_thresh; 0 disables perturbations.
    pub g_thresh: f64,
    /// Minimum number of iterations between perturbations.
    pub cooldown: usize,
    pub max_iters: usize,
    /// grad_tol only ends a run where no perturbation is due.
    pub stop: StopRule,
    pub seed: u64,
    /// Trust-region radius Δ.
    pub trust_radius: f64,
    /// Hessian-Lipschitz estimate L₂ for the cubic model.
    pub l2: f64,
}

impl Default for SaddleEscapeConfig {
    fn default() -> Self {
        SaddleEscapeConfig {
            eta: 0.1,
            radius: 1e-3,
            g_thresh: 1e-8,
            cooldown: 100,
            max_iters: 2000,
            stop: StopRule::default(),
            seed: 0,
            trust_radius: 0.1,
            l2: 1.0,
        }
    }
}

impl SaddleEscapeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return invalid("step size must be positive");
        }
        if !(self.radius > 0.0) || !(self.g_thresh >= 0.0) {
            return invalid("perturbation radius must be positive and the trigger nonnegative");
        }
        if !(self.trust_radius > 0.0) || !(self.l2 > 0.0) {
            return invalid("trust radius and L2 must be positive");
        }
        Ok(())
    }
}

/// Gradient descent that adds a uniform-sphere perturbation to the iterate
/// whenever the gradient is small. Trace events hold the iterations at which
/// a perturbation was injected; rows carry dist from `obj.dist` and incoh 0.
pub fn perturbed_gd(obj: &dyn Objective, x0: &Vector, cfg: &SaddleEscapeConfig) -> Result<(Vector, Trace)> {
    cfg.validate()?;
    if x0.len() != obj.dim() {
        return Err(Error::Shape(format!("x0 has length {}, objective has dimension {}", x0.len(), obj.dim())));
    }
    let mut rng = Rng::new(cfg.seed);
    let mut x = x0.clone();
    let mut g = obj.gradient(&x);
    let mut f = obj.value(&x);
    let mut last: Option<usize> = None;
    let due = |gn: f64, t: usize, last: Option<usize>| {
        cfg.g_thresh > 0.0 && gn <= cfg.g_thresh && last.is_none_or(|l| t >= l + cfg.cooldown)
    };
    let mut trace = Trace::new(false);
    trace.push(0, f, g.norm(), obj.dist(&x), 0.0);
    let done = |trace: &Trace, t: usize, last: Option<usize>| {
        let row = trace.rows.last().expect("row pushed");
        let rule = StopRule { grad_tol: None, ..cfg.stop };
        crate::gd::stop_now(&rule, trace, None)
            || cfg.stop.grad_tol.is_some_and(|tol| row.grad_norm <= tol && !due(row.grad_norm, t + 1, last))
    };
    if done(&trace, 0, last) {
        trace.outcome = Outcome::Converged;
        return Ok((x, trace));
    }
    let f0 = f;
    for t in 1..=cfg.max_iters {
        if due(g.norm(), t, last) {
            x += rng.unit_sphere(x.len()) * cfg.radius;
            g = obj.gradient(&x);
            trace.events.push(t);
            last = Some(t);
        }
        x.axpy(-cfg.eta, &g, 1.0);
        f = obj.value(&x);
        if !f.is_finite() || !x.iter().all(|v| v.is_finite()) || (f0 > 0.0 && f > crate::gd::DIVERGENCE_FACTOR * f0) {
            trace.outcome = Outcome::Diverged;
            return Ok((x, trace));
        }
        g = obj.gradient(&x);
        trace.push(t, f, g.norm(), obj.dist(&x), 0.0);
        if done(&trace, t, last) {
            trace.outcome = Outcome::Converged;
            return Ok((x, trace));
        }
    }
    trace.outcome = Outcome::MaxIters;
    Ok((x, trace))
}

fn check_dense(g: &Vector, h: &Mat) -> Result<()> {
    let n = g.len();
    if n > MAX_DENSE_DIM {
        return invalid(format!("dense second-order steps need n ≤ {MAX_DENSE_DIM}, got {n}"));
    }
    if h.nrows() != n || h.ncols() != n {
        return Err(Error::Shape(format!("Hessian is {}x{}, gradient has length {n}", h.nrows(), h.ncols())));
    }
    if !g.iter().chain(h.iter()).all(|v| v.is_finite()) {
        return Err(Error::Invalid("gradient or Hessian is not finite".into()));
    }
    Ok(())
}

/// Eigen-coordinates of the model: H = Q diag(λ) Qᵀ, c = Qᵀg.
struct Model {
    vals: Vec<f64>,
    vecs: Mat,
    c: Vector,
}

impl Model {
    fn new(g: &Vector, h: &Mat) -> Self {
        let (vals, vecs) = dense_eigen(h);
        let c = vecs.tr_mul(g);
        Model { vals, vecs, c }
    }

    fn lambda_min(&self) -> f64 {
        *self.vals.last().expect("nonempty")
    }

    /// Coefficients of s(μ) = −(H + μI)⁻¹g, skipping `skip` (set to zero).
    fn coeffs(&self, mu: f64, skip: &[bool]) -> Vector {
        Vector::from_iterator(
            self.c.len(),
            self.c.iter().zip(&self.vals).zip(skip).map(|((&c, &l), &s)| if s { 0.0 } else { -c / (l + mu) }),
        )
    }

    fn step(&self, coeffs: &Vector) -> Vector {
        &self.vecs * coeffs
    }

    /// Indices of the bottom eigenspace, and whether g is orthogonal to it.
    fn bottom(&self, gnorm: f64) -> (Vec<bool>, bool) {
        let lmin = self.lambda_min();
        let span = self.vals[0].abs().max(lmin.abs()).max(1.0);
        let mask: Vec<bool> = self.vals.iter().map(|&l| l - lmin <= 1e-12 * span).collect();
        let cb: f64 = self.c.iter().zip(&mask).filter(|(_, &m)| m).map(|(c, _)| c * c).sum::<f64>().sqrt();
        (mask, cb <= 1e-12 * gnorm)
    }
}

/// Root of a decreasing function on [lo, hi] by bisection.
fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// argmin over ‖s‖ ≤ Δ of gᵀs + ½sᵀHs.
pub fn solve_trust_region(g: &Vector, h: &Mat, delta: f64) -> Result<Vector> {
    check_dense(g, h)?;
    if !(delta > 0.0) {
        return invalid("trust radius must be positive");
    }
    let n = g.len();
    let model = Model::new(g, h);
    let lmin = model.lambda_min();
    let none = vec![false; n];
    if lmin > 0.0 {
        let newton = model.coeffs(0.0, &none);
        if newton.norm() <= delta {
            return Ok(model.step(&newton));
        }
    }
    let gnorm = g.norm();
    let lo = (-lmin).max(0.0);
    let (mask, hard) = model.bottom(gnorm);
    if hard && lmin <= 0.0 {
        let perp = model.coeffs(lo, &mask);
        let pn = perp.norm();
        if pn <= delta {
            let mut coeffs = perp;
            coeffs[n - 1] = (delta * delta - pn * pn).max(0.0).sqrt();
            return Ok(model.step(&coeffs));
        }
    }
    // ‖s(μ)‖ ≤ ‖g‖/(λ_min + μ), so μ = lo + ‖g‖/Δ is feasible
    let hi = lo + gnorm / delta;
    let mu = bisect(lo, hi, |mu| model.coeffs(mu, &none).norm() - delta);
    let mut coeffs = model.coeffs(mu, &none);
    let cn = coeffs.norm();
    if cn > delta {
        coeffs *= delta / cn;
    }
    Ok(model.step(&coeffs))
}

/// Global minimizer of gᵀs + ½sᵀHs + (L₂/6)‖s‖³. With μ = L₂‖s‖/2 the
/// minimizer is s(μ) = −(H + μI)⁻¹g for the unique μ ≥ max(0, −λ_min)
/// solving ‖s(μ)‖ = 2μ/L₂.
pub fn solve_cubic(g: &Vector, h: &Mat, l2: f64) -> Result<Vector> {
    check_dense(g, h)?;
    if !(l2 > 0.0 && l2.is_finite()) {
        return invalid("L2 must be positive");
    }
    let n = g.len();
    let model = Model::new(g, h);
    let lmin = model.lambda_min();
    let none = vec![false; n];
    let lo = (-lmin).max(0.0);
    let gnorm = g.norm();
    if gnorm == 0.0 && lmin >= 0.0 {
        return Ok(Vector::zeros(n));
    }
    let (mask, hard) = model.bottom(gnorm);
    if hard && lmin <= 0.0 {
        let perp = model.coeffs(lo, &mask);
        let pn = perp.norm();
        let r = 2.0 * lo / l2;
        if pn <= r {
            let mut coeffs = perp;
            coeffs[n - 1] = (r * r - pn * pn).max(0.0).sqrt();
            return Ok(model.step(&coeffs));
        }
    }
    let phi = |mu: f64| model.coeffs(mu, &none).norm() - 2.0 * mu / l2;
    let mut hi = lo.max(1e-300) * 2.0;
    while phi(hi) > 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Invalid("cubic multiplier diverged".into()));
        }
    }
    let mu = bisect(lo, hi, phi);
    Ok(model.step(&model.coeffs(mu, &none)))
}

/// Value of the cubic model at s.
pub fn cubic_model(g: &Vector, h: &Mat, l2: f64, s: &Vector) -> f64 {
    g.dot(s) + 0.5 * s.dot(&(h * s)) + l2 / 6.0 * s.norm().powi(3)
}

/// Value of the quadratic model at s.
pub fn quadratic_model(g: &Vector, h: &Mat, s: &Vector) -> f64 {
    g.dot(s) + 0.5 * s.dot(&(h * s))
}

/// x + argmin of the trust-region model at x.
pub fn trust_region_step(obj: &dyn Objective, x: &Vector, radius: f64) -> Result<Vector> {
    guard_dim(obj, x)?;
    Ok(x + solve_trust_region(&obj.gradient(x), &obj.hessian(x), radius)?)
}

/// x + argmin of the cubic-regularized model at x.
pub fn cubic_step(obj: &dyn Objective, x: &Vector, l2: f64) -> Result<Vector> {
    guard_dim(obj, x)?;
    Ok(x + solve_cubic(&obj.gradient(x), &obj.hessian(x), l2)?)
}

fn guard_dim(obj: &dyn Objective, x: &Vector) -> Result<()> {
    if obj.dim() > MAX_DENSE_DIM {
        return invalid(format!("dense second-order steps need n ≤ {MAX_DENSE_DIM}, got {}", obj.dim()));
    }
    if x.len() != obj.dim() {
        return Err(Error::Shape(format!("x has length {}, objective has dimension {}", x.len(), obj.dim())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saddle_step_hits_boundary() {
        let h = Mat::from_diagonal(&Vector::from_vec(vec![1.0, -2.0]));
        let s = solve_trust_region(&Vector::zeros(2), &h, 0.3).unwrap();
        assert!((s.norm() - 0.3).abs() < 1e-12);
        assert!(s[0].abs() < 1e-12);
    }

    #[test]
    fn cubic_scalar_closed_form() {
        // g = 1, h = 0, L = 2: min s + s|s|²/3 at s = −1
        let s = solve_cubic(&Vector::from_vec(vec![1.0]), &Mat::zeros(1, 1), 2.0).unwrap();
        assert!((s[0] + 1.0).abs() < 1e-12);
    }
}
