use serde::{Deserialize, Serialize};

use super::{perturbed_gd, Objective, SaddleEscapeConfig};
use crate::error::{invalid, Error, Result};
use crate::gd::{run_gd, Outcome, SolverConfig, Step, StopRule, Trace, DIVERGENCE_FACTOR};
use crate::linalg::{dense_eigen, spectral_norm, unvec, Mat, Vector};
use crate::point::FactorPoint;
use crate::problems::*;
use crate::rng::{derive_seed, Rng};

/// Phase retrieval from x₀ ~ N(0, ‖x⋆‖²/n·I) with vanilla GD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomInitConfig {
    pub n: usize,
    /// None: ⌈10 n ln n⌉.
    pub m: Option<usize>,
    pub trials: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// η = step_c/‖x⋆‖².
    pub step_c: f64,
}

impl Default for RandomInitConfig {
    fn default() -> Self {
        RandomInitConfig { n: 64, m: None, trials: 100, seed: 0, max_iters: 5000, step_c: 0.1 }
    }
}

impl RandomInitConfig {
    pub fn samples(&self) -> usize {
        self.m.unwrap_or_else(|| (10.0 * self.n as f64 * (self.n as f64).ln()).ceil() as usize)
    }
}

/// Success threshold on dist/‖x⋆‖ and the end of stage 1.
pub const STAGE2_TOL: f64 = 1e-5;
pub const STAGE1_TOL: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomInitTrial {
    pub seed: u64,
    pub success: bool,
    /// Iterations to dist ≤ 0.5‖x⋆‖.
    pub stage1: Option<usize>,
    /// Iterations to dist ≤ 1e-5‖x⋆‖.
    pub stage2: Option<usize>,
    pub iters: usize,
    pub final_rel_dist: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomInitReport {
    pub n: usize,
    pub m: usize,
    pub trials: Vec<RandomInitTrial>,
    pub successes: usize,
    pub median_stage1: Option<f64>,
    pub median_stage2: Option<f64>,
}

/// One trial; the instance uses `seed`, the random start a seed derived from it.
pub fn random_init_trial(cfg: &RandomInitConfig, seed: u64) -> Result<RandomInitTrial> {
    let inst = gen_phase_retrieval(cfg.n, cfg.samples(), seed)?;
    let ProblemInstance::PhaseRetrieval(p) = &inst else { unreachable!() };
    let scale = p.x_star.norm();
    let mut rng = Rng::new(derive_seed(seed, 1, 0));
    let x0 = rng.gaussian_vector(cfg.n) * (scale / (cfg.n as f64).sqrt());
    let solver = SolverConfig {
        step: Step::Constant { eta: cfg.step_c / (scale * scale) },
        max_iters: cfg.max_iters,
        stop: StopRule { dist_tol: Some(STAGE2_TOL * scale), ..Default::default() },
        ..Default::default()
    };
    let (_, trace) = run_gd(&inst, &FactorPoint::Vector(x0), &solver)?;
    let stage2 = trace.first_below(STAGE2_TOL * scale);
    Ok(RandomInitTrial {
        seed,
        success: stage2.is_some(),
        stage1: trace.first_below(STAGE1_TOL * scale),
        stage2,
        iters: trace.iters(),
        final_rel_dist: trace.final_dist() / scale,
    })
}

/// Trial seeds for `random_init_gd_experiment`.
pub fn random_init_seeds(cfg: &RandomInitConfig) -> Vec<u64> {
    (0..cfg.trials as u64).map(|t| derive_seed(cfg.seed, cfg.n as u64, t)).collect()
}

pub fn random_init_report(cfg: &RandomInitConfig, trials: Vec<RandomInitTrial>) -> RandomInitReport {
    let med = |f: fn(&RandomInitTrial) -> Option<usize>| {
        let mut v: Vec<f64> = trials.iter().filter_map(f).map(|k| k as f64).collect();
        median(&mut v)
    };
    RandomInitReport {
        n: cfg.n,
        m: cfg.samples(),
        successes: trials.iter().filter(|t| t.success).count(),
        median_stage1: med(|t| t.stage1),
        median_stage2: med(|t| t.stage2),
        trials,
    }
}

/// Sequential sweep over `random_init_seeds`.
pub fn random_init_gd_experiment(cfg: &RandomInitConfig) -> Result<RandomInitReport> {
    if cfg.n == 0 || cfg.trials == 0 {
        return invalid("n and trials must be positive");
    }
    let trials = random_init_seeds(cfg).into_iter().map(|s| random_init_trial(cfg, s)).collect::<Result<Vec<_>>>()?;
    Ok(random_init_report(cfg, trials))
}

fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len();
    Some(if k % 2 == 1 { v[k / 2] } else { 0.5 * (v[k / 2 - 1] + v[k / 2]) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeSummary {
    pub trials: usize,
    /// Runs that ended within `tol` of a global minimum.
    pub escaped: usize,
    pub median_iters: Option<f64>,
    /// Whether plain GD from the same start moved at all.
    pub vanilla_moved: bool,
}

/// Perturbed GD from `start` over `trials` seeds, each stopping at dist ≤ tol.
pub fn saddle_escape_experiment(
    obj: &dyn Objective,
    start: &Vector,
    cfg: &SaddleEscapeConfig,
    tol: f64,
    trials: usize,
) -> Result<EscapeSummary> {
    let vanilla = SaddleEscapeConfig { g_thresh: 0.0, max_iters: 1, ..*cfg };
    let (xv, _) = perturbed_gd(obj, start, &vanilla)?;
    let mut escaped = 0;
    let mut iters = Vec::new();
    for t in 0..trials as u64 {
        let run = SaddleEscapeConfig {
            seed: derive_seed(cfg.seed, 0, t),
            stop: StopRule { dist_tol: Some(tol), ..cfg.stop },
            ..*cfg
        };
        let (_, trace) = perturbed_gd(obj, start, &run)?;
        if trace.final_dist() <= tol {
            escaped += 1;
            iters.push(trace.iters() as f64);
        }
    }
    Ok(EscapeSummary { trials, escaped, median_iters: median(&mut iters), vanilla_moved: xv != *start })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverparamConfig {
    /// X₀ = init_scale · G with G an n×n standard Gaussian.
    pub init_scale: f64,
    /// η = step_c/ŝ, ŝ = mean(y) for phase retrieval or ‖(1/m)Σ y_iA_i‖ for sensing.
    pub step_c: f64,
    pub max_iters: usize,
    /// Stop once ‖XXᵀ − M⋆‖_F/‖M⋆‖_F ≤ tol.
    pub tol: f64,
    pub seed: u64,
}

impl Default for OverparamConfig {
    fn default() -> Self {
        OverparamConfig { init_scale: 1e-3, step_c: 0.04, max_iters: 5000, tol: 1e-3, seed: 0 }
    }
}

/// Eigenvalue cutoff, relative to the largest, for `effective_rank`.
pub const EFFECTIVE_RANK_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct OverparamResult {
    pub x: Mat,
    /// dist is ‖XXᵀ − M⋆‖_F, incoh is 0.
    pub trace: Trace,
    pub final_error: f64,
    pub rel_error: f64,
    pub effective_rank: usize,
}

/// Number of eigenvalues of XXᵀ above EFFECTIVE_RANK_TOL·λ₁.
pub fn effective_rank(x: &Mat) -> usize {
    let (vals, _) = dense_eigen(&(x * x.transpose()));
    let top = vals.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    vals.iter().filter(|&&v| v > EFFECTIVE_RANK_TOL * top).count()
}

/// f_op(X) = (1/m)Σ(⟨A_i, XXᵀ⟩ − y_i)² and its gradient (4/m)Σ r_iA_iX.
struct Lifted<'a> {
    inst: &'a ProblemInstance,
    m_star: Mat,
}

impl Lifted<'_> {
    fn n(&self) -> usize {
        self.m_star.nrows()
    }

    fn eval(&self, x: &Mat) -> (f64, Mat) {
        match self.inst {
            ProblemInstance::PhaseRetrieval(p) => {
                let ax = &p.a * x;
                let r = Vector::from_iterator(p.m, (0..p.m).map(|i| ax.row(i).norm_squared() - p.y[i]));
                let mut w = ax;
                for i in 0..p.m {
                    w.row_mut(i).scale_mut(r[i]);
                }
                let k = p.m as f64;
                (r.norm_squared() / k, p.a.tr_mul(&w) * (4.0 / k))
            }
            ProblemInstance::Sensing(s) => {
                let xx = x * x.transpose();
                let r = sensing_forward(&s.a, &xx) - &s.y;
                let k = s.m as f64;
                let g = unvec((&s.a * &r).as_slice(), s.n1, s.n2);
                (r.norm_squared() / k, (&g + g.transpose()) * x * (2.0 / k))
            }
            _ => unreachable!(),
        }
    }

    fn scale(&self) -> f64 {
        match self.inst {
            ProblemInstance::PhaseRetrieval(p) => p.y.mean(),
            ProblemInstance::Sensing(s) => {
                let y = unvec((&s.a * &s.y).as_slice(), s.n1, s.n2) / s.m as f64;
                spectral_norm(&((&y + y.transpose()) * 0.5))
            }
            _ => unreachable!(),
        }
    }
}

/// GD on the lifted objective over X ∈ ℝ^{n×n} from a small random start.
pub fn overparam_gd_experiment(inst: &ProblemInstance, cfg: &OverparamConfig) -> Result<OverparamResult> {
    let lifted = match inst {
        ProblemInstance::PhaseRetrieval(p) => Lifted { inst, m_star: &p.x_star * p.x_star.transpose() },
        ProblemInstance::Sensing(s) if s.symmetric => Lifted { inst, m_star: s.truth.m_star.clone() },
        _ => return Err(Error::Family("over-parameterized GD needs phase retrieval or symmetric sensing".into())),
    };
    if !(cfg.init_scale >= 0.0 && cfg.step_c > 0.0 && cfg.tol > 0.0) {
        return invalid("init scale must be nonnegative, step constant and tolerance positive");
    }
    let n = lifted.n();
    let s_hat = lifted.scale();
    let eta = cfg.step_c / if s_hat > 0.0 { s_hat } else { 1.0 };
    let mut rng = Rng::new(cfg.seed);
    let mut x = rng.gaussian_matrix(n, n) * cfg.init_scale;
    let m_norm = lifted.m_star.norm().max(f64::MIN_POSITIVE);
    let err = |x: &Mat| (x * x.transpose() - &lifted.m_star).norm();
    let mut trace = Trace::new(false);
    let (mut f, mut g) = lifted.eval(&x);
    let f0 = f;
    trace.push(0, f, g.norm(), err(&x), 0.0);
    for t in 1..=cfg.max_iters {
        if trace.final_dist() <= cfg.tol * m_norm {
            trace.outcome = Outcome::Converged;
            break;
        }
        x -= &g * eta;
        (f, g) = lifted.eval(&x);
        if !f.is_finite() || f > DIVERGENCE_FACTOR * f0.max(f64::MIN_POSITIVE) {
            trace.outcome = Outcome::Diverged;
            break;
        }
        trace.push(t, f, g.norm(), err(&x), 0.0);
    }
    if trace.outcome == Outcome::MaxIters && trace.final_dist() <= cfg.tol * m_norm {
        trace.outcome = Outcome::Converged;
    }
    let final_error = err(&x);
    Ok(OverparamResult { effective_rank: effective_rank(&x), rel_error: final_error / m_norm, final_error, trace, x })
}
