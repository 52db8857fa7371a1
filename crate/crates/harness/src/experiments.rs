//! Experiment runners: single solves, phase-transition grids, initializer
//! comparisons, cosine curves and critical-point reports.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use lowrank_ncvx::direct::{altmin_mc, altmin_sensing, er_phase_retrieval, ppm, svp, SvpConfig};
use lowrank_ncvx::gd::{run_gd, run_rpca, Outcome, Trace};
use lowrank_ncvx::landscape::{classify_rank1_criticals, CriticalPoint};
use lowrank_ncvx::linalg::orth;
use lowrank_ncvx::metrics::cosine_sq;
use lowrank_ncvx::problems::*;
use lowrank_ncvx::rng::derive_seed;
use lowrank_ncvx::spectral::*;
use lowrank_ncvx::{CVector, FactorPoint, Mat, ProblemInstance, Rng};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::*;
use crate::output::{fmt_f64, write_csv, write_json};

/// Success: final distance ≤ SUCCESS_REL × truth scale.
pub const SUCCESS_REL: f64 = 1e-5;
pub const SUCCESS_RULE: &str = "final dist <= 1e-5 x truth scale; family metric for gd/error_reduction/ppm, \
||M - M*||_F / ||M*||_F for altmin/svp";

pub fn build_instance(spec: &ProblemSpec, seed: u64) -> Result<ProblemInstance> {
    let inst = match *spec {
        ProblemSpec::Sensing { n, n2, r, m, symmetric, noise } => {
            let p = SensingParams { n1: n, n2: n2.unwrap_or(n), r, m, symmetric, noise, spectrum: Spectrum::Gaussian };
            gen_matrix_sensing_with(&p, seed)?
        }
        ProblemSpec::PhaseRetrieval { n, m, noise, outliers } => {
            let clean = gen_phase_retrieval_noisy(n, m, noise, seed)?;
            if outliers > 0.0 {
                corrupt_outliers(&clean, outliers, seed)?
            } else {
                clean
            }
        }
        ProblemSpec::QuadraticSensing { n, r, m } => gen_quadratic_sensing(n, r, m, seed)?,
        ProblemSpec::Completion { n, n2, r, p, symmetric } => gen_matrix_completion(n, n2.unwrap_or(n), r, p, symmetric, seed)?,
        ProblemSpec::BlindDeconv { k, n, m } => gen_blind_deconv(k, n, m, seed)?,
        ProblemSpec::Rpca { n, n2, r, p, alpha, magnitude } => gen_rpca(n, n2.unwrap_or(n), r, p, alpha, magnitude, seed)?,
        ProblemSpec::PhaseSync { n, sigma } => gen_phase_sync(n, sigma, seed)?,
        ProblemSpec::JointAlignment { n, alphabet, flip } => gen_joint_alignment(n, alphabet, flip, seed)?,
    };
    Ok(inst)
}

pub fn instance_rank(inst: &ProblemInstance) -> usize {
    match inst {
        ProblemInstance::Sensing(s) => s.r,
        ProblemInstance::QuadraticSensing(q) => q.r,
        ProblemInstance::Completion(c) => c.r,
        ProblemInstance::RobustPca(c) => c.r,
        _ => 1,
    }
}

fn low_rank_target(inst: &ProblemInstance) -> Result<&Mat> {
    match inst {
        ProblemInstance::Sensing(s) => Ok(&s.truth.m_star),
        ProblemInstance::Completion(c) => Ok(&c.truth.m_star),
        _ => bail!("{:?} has no low-rank matrix target", inst.family()),
    }
}

/// Random point shaped like `like` with Frobenius norm `norm`.
pub fn random_like(like: &FactorPoint, norm: f64, rng: &mut Rng) -> FactorPoint {
    let cvec = |n: usize, rng: &mut Rng| CVector::from_fn(n, |_, _| rng.complex_normal());
    let p = match like {
        FactorPoint::Sym(x) => FactorPoint::Sym(rng.gaussian_matrix(x.nrows(), x.ncols())),
        FactorPoint::Asym { l, r } => {
            FactorPoint::Asym { l: rng.gaussian_matrix(l.nrows(), l.ncols()), r: rng.gaussian_matrix(r.nrows(), r.ncols()) }
        }
        FactorPoint::Vector(v) => FactorPoint::Vector(rng.gaussian_vector(v.len())),
        FactorPoint::ComplexPair { h, x } => FactorPoint::ComplexPair { h: cvec(h.len(), rng), x: cvec(x.len(), rng) },
        FactorPoint::ComplexVector(v) => FactorPoint::ComplexVector(cvec(v.len(), rng)),
    };
    let s = p.norm();
    if s > 0.0 {
        p.scaled(norm / s)
    } else {
        p
    }
}

/// Starting data for one solver run.
#[derive(Debug, Clone)]
pub struct Start {
    pub point: FactorPoint,
    /// Left factor basis for alternating minimization.
    pub left: Option<Mat>,
    /// Initial sparse component for robust PCA.
    pub s0: Option<Mat>,
}

pub fn make_start(inst: &ProblemInstance, init: &InitSpec, threshold_c: f64, seed: u64) -> Result<Start> {
    let r = instance_rank(inst);
    let truth = inst.truth_point();
    let left_of = |est: &SpectralEstimate| match &est.subspaces {
        Subspaces::Real(s) => Some(s[0].basis.clone()),
        Subspaces::Complex(_) => None,
    };
    match *init {
        InitSpec::Truth => {
            let left = match &truth {
                FactorPoint::Asym { l, .. } | FactorPoint::Sym(l) => Some(orth(l.clone())),
                _ => None,
            };
            Ok(Start { point: truth, left, s0: None })
        }
        InitSpec::Random { scale } => {
            let mut rng = Rng::new(derive_seed(seed, u64::MAX, 0));
            let point = random_like(&truth, scale * inst.truth_scale(), &mut rng);
            let left = match &point {
                FactorPoint::Asym { l, .. } | FactorPoint::Sym(l) => Some(orth(l.clone())),
                _ => None,
            };
            Ok(Start { point, left, s0: None })
        }
        InitSpec::Spectral { prep, scale } => {
            if (prep.is_some() || scale.is_some()) && !matches!(inst, ProblemInstance::PhaseRetrieval(_)) {
                bail!("init.prep and init.scale apply to phase retrieval only");
            }
            let est = match inst {
                ProblemInstance::Sensing(_) => init_sensing(inst, r)?,
                ProblemInstance::PhaseRetrieval(_) => {
                    init_phase_retrieval_scaled(inst, &prep.unwrap_or(Preprocessing::Identity), scale.unwrap_or_default())?
                }
                ProblemInstance::QuadraticSensing(_) => init_quadratic_sensing(inst, r)?,
                ProblemInstance::Completion(_) => init_matrix_completion(inst, r)?,
                ProblemInstance::BlindDeconv(_) => init_blind_deconv(inst)?,
                ProblemInstance::RobustPca(_) => {
                    let (est, s0) = init_rpca(inst, r, threshold_c)?;
                    let left = left_of(&est);
                    return Ok(Start { point: est.point, left, s0: Some(s0) });
                }
                ProblemInstance::PhaseSync(_) => return Ok(Start { point: init_phase_sync(inst)?, left: None, s0: None }),
                ProblemInstance::JointAlignment(_) => {
                    return Ok(Start { point: FactorPoint::Vector(init_joint_alignment(inst)?), left: None, s0: None })
                }
            };
            let left = left_of(&est);
            Ok(Start { point: est.point, left, s0: None })
        }
    }
}

/// Outcome of one (instance, init, solver) run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub seed: u64,
    pub success: bool,
    pub iters: usize,
    pub outcome: Outcome,
    /// Final distance relative to the truth scale.
    pub final_dist: f64,
    /// Distance of the start relative to the truth scale; NaN when the
    /// solver ignores the start.
    pub init_dist: f64,
    /// cos² between the start and x⋆ (phase retrieval only).
    pub rho: Option<f64>,
}

pub fn run_trial(inst: &ProblemInstance, init: &InitSpec, solver: &SolverSpec, seed: u64) -> Result<(TrialResult, Trace)> {
    let threshold_c = match solver {
        SolverSpec::Gd { config } => config.threshold_c,
        _ => 3.0,
    };
    let scale = inst.truth_scale();
    let rel = |d: f64| if scale > 0.0 { d / scale } else { d };
    let start = if matches!(solver, SolverSpec::Svp { .. }) { None } else { Some(make_start(inst, init, threshold_c, seed)?) };
    let (init_dist, rho) = match (&start, inst) {
        (None, _) => (f64::NAN, None),
        (Some(s), ProblemInstance::PhaseRetrieval(p)) => {
            let x = s.point.as_vector().ok_or_else(|| anyhow!("phase retrieval start is not a vector"))?;
            (rel(inst.dist_to_truth(&s.point)?), Some(cosine_sq(x, &p.x_star).unwrap_or(0.0)))
        }
        (Some(s), _) => (rel(inst.dist_to_truth(&s.point)?), None),
    };

    let (final_dist, trace) = match solver {
        SolverSpec::Gd { config } => {
            let start = start.expect("gd uses a start");
            let mut cfg = config.clone();
            if cfg.stop.dist_tol.is_none() {
                cfg.stop.dist_tol = Some(SUCCESS_REL * scale);
            }
            let (x, tr) = match inst {
                ProblemInstance::RobustPca(c) => {
                    let s0 = start.s0.unwrap_or_else(|| Mat::zeros(c.n1, c.n2));
                    let (x, _, tr) = run_rpca(inst, &start.point, &s0, &cfg)?;
                    (x, tr)
                }
                _ => run_gd(inst, &start.point, &cfg)?,
            };
            let d = if x.is_finite() { rel(inst.dist_to_truth(&x)?) } else { f64::INFINITY };
            (d, tr)
        }
        SolverSpec::Altmin { config } => {
            let start = start.expect("altmin uses a start");
            let l0 = start.left.ok_or_else(|| anyhow!("altmin needs a real matrix start"))?;
            let (l, r, tr) = match inst {
                ProblemInstance::Sensing(_) => altmin_sensing(inst, &l0, config)?,
                ProblemInstance::Completion(_) => altmin_mc(inst, &l0, config)?,
                _ => bail!("altmin runs on matrix sensing and completion, not {:?}", inst.family()),
            };
            let target = low_rank_target(inst)?;
            ((target - &l * r.transpose()).norm() / target.norm(), tr)
        }
        SolverSpec::ErrorReduction { config } => {
            let start = start.expect("error reduction uses a start");
            let x0 = start.point.as_vector().ok_or_else(|| anyhow!("error reduction needs a vector start"))?.clone();
            let (x, tr) = er_phase_retrieval(inst, &x0, config)?;
            (rel(inst.dist_to_truth(&FactorPoint::Vector(x))?), tr)
        }
        SolverSpec::Svp { config } => {
            let cfg = config.unwrap_or(SvpConfig { r: instance_rank(inst), ..Default::default() });
            let (_, tr) = svp(inst, &cfg)?;
            let target = low_rank_target(inst)?;
            (tr.final_dist() / target.norm(), tr)
        }
        SolverSpec::Ppm { eta, max_iters } => {
            let start = start.expect("ppm uses a start");
            let (x, tr) = ppm(inst, &start.point, *eta, *max_iters)?;
            (rel(inst.dist_to_truth(&x)?), tr)
        }
    };
    let res = TrialResult {
        seed,
        success: final_dist <= SUCCESS_REL,
        iters: trace.iters(),
        outcome: trace.outcome,
        final_dist,
        init_dist,
        rho,
    };
    Ok((res, trace))
}

pub fn median(v: &[f64]) -> f64 {
    let mut s: Vec<f64> = v.to_vec();
    if s.is_empty() {
        return f64::NAN;
    }
    s.sort_by(f64::total_cmp);
    let k = s.len();
    if k % 2 == 1 {
        s[k / 2]
    } else {
        0.5 * (s[k / 2 - 1] + s[k / 2])
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Cartesian product of axis values; the first axis varies slowest.
pub fn grid_cells(axes: &[Axis]) -> Vec<Vec<f64>> {
    let mut cells = vec![Vec::new()];
    for a in axes {
        cells = cells.into_iter().flat_map(|c| a.values.iter().map(move |&v| [c.clone(), vec![v]].concat())).collect();
    }
    cells
}

fn cell_problem(problem: &ProblemSpec, axes: &[Axis], values: &[f64]) -> Result<ProblemSpec> {
    let pairs: Vec<(&str, f64)> = axes.iter().map(|a| a.param.as_str()).zip(values.iter().copied()).collect();
    Ok(problem.with_axes(&pairs)?)
}

/// One phase-transition cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub cell: usize,
    pub values: Vec<f64>,
    pub success_rate: f64,
    pub median_iters: f64,
    pub median_final_dist: f64,
    pub diverged: usize,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub params: Vec<String>,
    pub rows: Vec<GridRow>,
}

/// Trial seeds are derive_seed(master, cell, trial), so a cell's results do
/// not depend on the rest of the grid.
pub fn phase_transition(spec: &GridSpec, seed: u64) -> Result<GridResult> {
    let cells = grid_cells(&spec.axes);
    let problems: Vec<ProblemSpec> = cells.iter().map(|v| cell_problem(&spec.problem, &spec.axes, v)).collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..spec.trials).map(move |t| (c, t))).collect();
    let results: Vec<TrialResult> = jobs
        .par_iter()
        .map(|&(c, t)| {
            let s = derive_seed(seed, c as u64, t as u64);
            let inst = build_instance(&problems[c], s).with_context(|| format!("cell {c} trial {t}"))?;
            run_trial(&inst, &spec.init, &spec.solver, s).map(|r| r.0).with_context(|| format!("cell {c} trial {t}"))
        })
        .collect::<Result<_>>()?;
    let rows = cells
        .iter()
        .enumerate()
        .map(|(c, values)| {
            let rs = &results[c * spec.trials..(c + 1) * spec.trials];
            let ok = rs.iter().filter(|r| r.success).count();
            GridRow {
                cell: c,
                values: values.clone(),
                success_rate: ok as f64 / spec.trials as f64,
                median_iters: median(&rs.iter().map(|r| r.iters as f64).collect::<Vec<_>>()),
                median_final_dist: median(&rs.iter().map(|r| r.final_dist).collect::<Vec<_>>()),
                diverged: rs.iter().filter(|r| r.outcome == Outcome::Diverged).count(),
                trials: spec.trials,
            }
        })
        .collect();
    Ok(GridResult { params: spec.axes.iter().map(|a| a.param.clone()).collect(), rows })
}

/// One (cell, initializer) row of an initializer comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub cell: usize,
    pub values: Vec<f64>,
    pub init_index: usize,
    pub init: String,
    pub success_rate: f64,
    pub mean_rho: f64,
    pub median_init_dist: f64,
    pub median_iters: f64,
    pub trials: usize,
}

/// Every initializer sees the same instances (paired seeds).
pub fn init_compare(spec: &CompareSpec, seed: u64) -> Result<Vec<CompareRow>> {
    let cells = grid_cells(&spec.axes);
    let problems: Vec<ProblemSpec> = cells.iter().map(|v| cell_problem(&spec.problem, &spec.axes, v)).collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..spec.trials).map(move |t| (c, t))).collect();
    let results: Vec<Vec<TrialResult>> = jobs
        .par_iter()
        .map(|&(c, t)| {
            let s = derive_seed(seed, c as u64, t as u64);
            let inst = build_instance(&problems[c], s)?;
            spec.inits
                .iter()
                .map(|init| run_trial(&inst, init, &spec.solver, s).map(|r| r.0))
                .collect::<Result<Vec<_>>>()
                .with_context(|| format!("cell {c} trial {t}"))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (c, values) in cells.iter().enumerate() {
        for (i, init) in spec.inits.iter().enumerate() {
            let rs: Vec<&TrialResult> = results[c * spec.trials..(c + 1) * spec.trials].iter().map(|v| &v[i]).collect();
            let rhos: Vec<f64> = rs.iter().filter_map(|r| r.rho).collect();
            rows.push(CompareRow {
                cell: c,
                values: values.clone(),
                init_index: i,
                init: init.label(),
                success_rate: rs.iter().filter(|r| r.success).count() as f64 / spec.trials as f64,
                mean_rho: if rhos.is_empty() { f64::NAN } else { mean(&rhos) },
                median_init_dist: median(&rs.iter().map(|r| r.init_dist).collect::<Vec<_>>()),
                median_iters: median(&rs.iter().map(|r| r.iters as f64).collect::<Vec<_>>()),
                trials: spec.trials,
            });
        }
    }
    Ok(rows)
}

pub fn rho_curve(spec: &RhoSpec, seed: u64) -> Result<Vec<RhoRow>> {
    let per_prep: Vec<Vec<RhoRow>> = spec
        .preps
        .par_iter()
        .map(|p| rho_vs_alpha_experiment(spec.n, &spec.alphas, p, spec.trials, seed).map_err(anyhow::Error::from))
        .collect::<Result<_>>()?;
    Ok(per_prep.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandscapeReport {
    pub schema: String,
    pub matrix: Vec<Vec<f64>>,
    pub hessian_source: String,
    pub critical_points: Vec<CriticalPoint>,
}

pub fn landscape(spec: &LandscapeSpec) -> Result<LandscapeReport> {
    let n = spec.matrix.len();
    let m = Mat::from_fn(n, n, |i, j| spec.matrix[i][j]);
    Ok(LandscapeReport {
        schema: "lowrank-ncvx landscape v1".into(),
        matrix: spec.matrix.clone(),
        hessian_source: "analytic".into(),
        critical_points: classify_rank1_criticals(&m)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSummary {
    pub schema: String,
    pub family: Family,
    pub instance_seed: u64,
    pub solver: String,
    pub init: String,
    pub success_rule: String,
    #[serde(flatten)]
    pub result: TrialResult,
}

pub fn solve_instance(cfg: &ExperimentConfig, spec: &SolveSpec) -> Result<ProblemInstance> {
    match (&spec.problem, &spec.instance) {
        (Some(p), None) => build_instance(p, cfg.seed),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing instance {}", path.display()))
        }
        _ => unreachable!("validated"),
    }
}

pub fn solve(inst: &ProblemInstance, spec: &SolveSpec, seed: u64) -> Result<(SolveSummary, Trace)> {
    let (result, trace) = run_trial(inst, &spec.init, &spec.solver, seed)?;
    let init = if matches!(spec.solver, SolverSpec::Svp { .. }) { "none".into() } else { spec.init.label() };
    let summary = SolveSummary {
        schema: "lowrank-ncvx summary v1".into(),
        family: inst.family(),
        instance_seed: inst.seed(),
        solver: spec.solver.name().into(),
        init,
        success_rule: SUCCESS_RULE.into(),
        result,
    };
    Ok((summary, trace))
}

pub fn trace_csv(trace: &Trace) -> String {
    format!("# lowrank-ncvx trace v1\n{}", trace.to_csv_string())
}

pub fn grid_csv(res: &GridResult) -> Result<String> {
    let mut header: Vec<String> = vec!["cell".into()];
    header.extend(res.params.iter().cloned());
    header.extend(["success_rate", "median_iters", "median_final_dist", "diverged", "trials"].map(String::from));
    let rows: Vec<Vec<String>> = res
        .rows
        .iter()
        .map(|r| {
            let mut v = vec![r.cell.to_string()];
            v.extend(r.values.iter().map(|&x| fmt_f64(x)));
            v.extend([fmt_f64(r.success_rate), fmt_f64(r.median_iters), fmt_f64(r.median_final_dist)]);
            v.extend([r.diverged.to_string(), r.trials.to_string()]);
            v
        })
        .collect();
    write_csv("grid", &[&format!("success: {SUCCESS_RULE}")], &header, &rows)
}

pub fn compare_csv(params: &[String], rows: &[CompareRow]) -> Result<String> {
    let mut header: Vec<String> = vec!["cell".into()];
    header.extend(params.iter().cloned());
    header.extend(
        ["init_index", "init", "success_rate", "mean_rho", "median_init_dist", "median_iters", "trials"].map(String::from),
    );
    let out: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut v = vec![r.cell.to_string()];
            v.extend(r.values.iter().map(|&x| fmt_f64(x)));
            v.extend([r.init_index.to_string(), r.init.clone()]);
            v.extend([fmt_f64(r.success_rate), fmt_f64(r.mean_rho), fmt_f64(r.median_init_dist), fmt_f64(r.median_iters)]);
            v.push(r.trials.to_string());
            v
        })
        .collect();
    write_csv("init_compare", &[&format!("success: {SUCCESS_RULE}")], &header, &out)
}

pub fn rho_csv(rows: &[RhoRow]) -> Result<String> {
    let header: Vec<String> = ["prep", "alpha", "mean_rho", "std_rho", "trials"].map(String::from).to_vec();
    let out: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.prep.clone(), fmt_f64(r.alpha), fmt_f64(r.mean_rho), fmt_f64(r.std_rho), r.trials.to_string()])
        .collect();
    write_csv("rho_curve", &["rho: cos^2 angle between spectral estimate and x*"], &header, &out)
}

/// Runs one parsed config and writes its outputs under `out`. Returns the
/// files written, in order.
pub fn run_config(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut written = Vec::new();
    let mut put = |name: &str, text: String| -> Result<()> {
        let p = out.join(name);
        std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
        written.push(p);
        Ok(())
    };
    match &cfg.experiment {
        Experiment::Solve(spec) => {
            let inst = solve_instance(cfg, spec)?;
            let (summary, trace) = solve(&inst, spec, cfg.seed)?;
            put("trace.csv", trace_csv(&trace))?;
            put("summary.json", write_json(&summary)?)?;
        }
        Experiment::PhaseTransition(spec) => {
            let res = phase_transition(spec, cfg.seed)?;
            put("grid.csv", grid_csv(&res)?)?;
        }
        Experiment::InitCompare(spec) => {
            let rows = init_compare(spec, cfg.seed)?;
            let params: Vec<String> = spec.axes.iter().map(|a| a.param.clone()).collect();
            put("init_compare.csv", compare_csv(&params, &rows)?)?;
        }
        Experiment::RhoCurve(spec) => {
            let rows = rho_curve(spec, cfg.seed)?;
            put("rho_curve.csv", rho_csv(&rows)?)?;
        }
        Experiment::Landscape(spec) => {
            put("landscape.json", write_json(&landscape(spec)?)?)?;
        }
        Experiment::Acceptance(_) => bail!("acceptance configs run through `accept`"),
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_are_row_major() {
        let axes = vec![
            Axis { param: "a".into(), values: vec![1.0, 2.0] },
            Axis { param: "b".into(), values: vec![10.0, 20.0, 30.0] },
        ];
        let c = grid_cells(&axes);
        assert_eq!(c.len(), 6);
        assert_eq!(c[0], vec![1.0, 10.0]);
        assert_eq!(c[2], vec![1.0, 30.0]);
        assert_eq!(c[3], vec![2.0, 10.0]);
        assert_eq!(grid_cells(&[]), vec![Vec::<f64>::new()]);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn truth_start_succeeds_immediately() {
        let spec = ProblemSpec::PhaseRetrieval { n: 8, m: 64, noise: 0.0, outliers: 0.0 };
        let inst = build_instance(&spec, 3).unwrap();
        let (r, _) = run_trial(&inst, &InitSpec::Truth, &SolverSpec::default(), 3).unwrap();
        assert!(r.success);
        assert_eq!(r.iters, 0);
        assert_eq!(r.rho, Some(1.0));
    }

    #[test]
    fn random_start_has_requested_norm() {
        let inst = build_instance(&ProblemSpec::BlindDeconv { k: 4, n: 3, m: 32 }, 1).unwrap();
        let s = make_start(&inst, &InitSpec::Random { scale: 0.5 }, 3.0, 9).unwrap();
        assert!((s.point.norm() - 0.5 * inst.truth_scale()).abs() < 1e-12);
        let again = make_start(&inst, &InitSpec::Random { scale: 0.5 }, 3.0, 9).unwrap();
        assert_eq!(s.point, again.point);
    }

    #[test]
    fn every_solver_runs_on_its_family() {
        let cases = [
            (ProblemSpec::Sensing { n: 8, n2: Some(7), r: 1, m: 200, symmetric: false, noise: 0.0 }, "altmin"),
            (ProblemSpec::Completion { n: 12, n2: None, r: 1, p: 0.8, symmetric: false }, "svp"),
            (ProblemSpec::PhaseRetrieval { n: 8, m: 80, noise: 0.0, outliers: 0.0 }, "error_reduction"),
            (ProblemSpec::PhaseSync { n: 10, sigma: 0.0 }, "ppm"),
            (ProblemSpec::JointAlignment { n: 6, alphabet: 3, flip: 0.0 }, "ppm"),
            (ProblemSpec::Rpca { n: 20, n2: None, r: 1, p: 0.8, alpha: 0.0, magnitude: 1.0 }, "gd"),
        ];
        for (problem, method) in cases {
            let solver: SolverSpec = serde_json::from_str(&format!(r#"{{"method": "{method}"}}"#)).unwrap();
            let inst = build_instance(&problem, 2).unwrap();
            let (r, _) = run_trial(&inst, &InitSpec::default(), &solver, 2).unwrap();
            assert!(r.final_dist.is_finite(), "{method} on {}", problem.family());
            assert!(r.success, "{method} on {}: {}", problem.family(), r.final_dist);
        }
    }
}
