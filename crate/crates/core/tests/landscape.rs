mod oracle;

use lowrank_ncvx::gd::*;
use lowrank_ncvx::landscape::*;
use lowrank_ncvx::problems::*;
use lowrank_ncvx::{FactorPoint, Mat, ProblemInstance, Rng, Vector};

fn fig_matrix() -> Mat {
    Mat::from_row_slice(2, 2, &[1.0, -0.5, -0.5, 1.0])
}

fn near(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
}

#[test]
fn rank1_hessian_matches_finite_differences() {
    let mut rng = Rng::new(1);
    for _ in 0..20 {
        let m = oracle::random_symmetric(5, &mut rng);
        let x = rng.gaussian_vector(5);
        let h = rank1_hessian(&m, &x);
        assert_eq!(h, h.transpose());
        let g = |v: &Vector| v * v.dot(v) - &m * v;
        let mut fd = Mat::zeros(5, 5);
        for j in 0..5 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += 1e-6;
            xm[j] -= 1e-6;
            fd.set_column(j, &((g(&xp) - g(&xm)) / 2e-6));
        }
        assert!((&h - &fd).norm() < 1e-5 * h.norm().max(1.0));
    }
}

#[test]
fn two_by_two_landscape() {
    let pts = classify_rank1_criticals(&fig_matrix()).unwrap();
    assert_eq!(pts.len(), 5);
    let a = 1.5f64.sqrt() / 2f64.sqrt();
    let b = 0.5f64.sqrt() / 2f64.sqrt();
    let find = |loc: [f64; 2]| pts.iter().find(|p| near(&p.location, &loc)).unwrap_or_else(|| panic!("{loc:?} missing"));
    for s in [1.0, -1.0] {
        assert_eq!(find([s * a, -s * a]).kind, CriticalKind::GlobalMin);
        assert_eq!(find([s * b, s * b]).kind, CriticalKind::StrictSaddle);
    }
    assert_eq!(find([0.0, 0.0]).kind, CriticalKind::LocalMax);
    // kinds agree with an independent eigen-solve of ‖x‖²I + 2xxᵀ − M
    for p in &pts {
        assert!(p.grad_norm < 1e-10);
        let x = Vector::from_column_slice(&p.location);
        let mut h = &x * x.transpose() * 2.0 - fig_matrix();
        for i in 0..2 {
            h[(i, i)] += x.norm_squared();
        }
        let (vals, _) = oracle::jacobi_eigen(&h);
        assert!((vals[vals.len() - 1] - p.lambda_min).abs() < 1e-10);
        assert!((vals[0] - p.lambda_max).abs() < 1e-10);
        let expected = if vals[1] > 0.0 {
            CriticalKind::GlobalMin
        } else if vals[0] < 0.0 {
            CriticalKind::LocalMax
        } else {
            CriticalKind::StrictSaddle
        };
        assert_eq!(p.kind, expected);
    }
}

#[test]
fn singular_matrix_origin_is_saddle() {
    let m = Mat::from_diagonal(&Vector::from_vec(vec![2.0, 1.0, 0.0]));
    let pts = classify_rank1_criticals(&m).unwrap();
    assert_eq!(pts.len(), 5);
    let origin = pts.iter().find(|p| p.location.iter().all(|&v| v == 0.0)).unwrap();
    assert_eq!(origin.kind, CriticalKind::StrictSaddle);
    assert!(classify_rank1_criticals(&Mat::identity(2, 2)).is_err());
    let indefinite = Mat::from_diagonal(&Vector::from_vec(vec![2.0, -1.0]));
    assert!(classify_rank1_criticals(&indefinite).is_err());
}

#[test]
fn critical_points_of_random_psd_matrices() {
    let mut rng = Rng::new(2);
    for _ in 0..50 {
        let g = rng.gaussian_matrix(6, 6);
        let m = &g * g.transpose();
        let pts = classify_rank1_criticals(&m).unwrap();
        assert_eq!(pts.len(), 13);
        assert_eq!(pts.iter().filter(|p| p.kind == CriticalKind::GlobalMin).count(), 2);
        assert_eq!(pts.iter().filter(|p| p.kind == CriticalKind::StrictSaddle).count(), 10);
        assert_eq!(pts.iter().filter(|p| p.kind == CriticalKind::LocalMax).count(), 1);
        for p in &pts {
            assert!(p.grad_norm < 1e-10 * m.norm().powf(1.5).max(1.0), "{}", p.grad_norm);
        }
    }
}

#[test]
fn strict_saddle_clauses() {
    let m = Mat::from_diagonal(&Vector::from_vec(vec![2.0, 1.0]));
    let obj = Rank1Mf::new(m);
    let xs = Vector::from_vec(vec![2f64.sqrt(), 0.0]);
    let minima = [xs.clone(), -&xs];
    let saddle = Vector::from_vec(vec![0.0, 1.0]);
    let rep = strict_saddle_check(&obj, &saddle, 1e-6, 0.5, 0.1, &minima).unwrap();
    assert!(rep.clauses.negative_curvature && !rep.clauses.strong_gradient && !rep.clauses.near_minimum);
    assert!(rep.lambda_min <= -0.8 * (2.0 - 1.0));
    let rep = strict_saddle_check(&obj, &xs, 1e-6, 0.5, 0.1, &minima).unwrap();
    assert!(rep.clauses.near_minimum && !rep.clauses.negative_curvature);
    assert!(strict_saddle_check(&obj, &xs, 0.0, 0.5, 0.1, &minima).is_err());

    // ball of radius 3‖x⋆‖ around the origin
    let radius = 3.0 * xs.norm();
    let eps = 0.05 * xs.norm().powi(3);
    let mut rng = Rng::new(3);
    let (mut strong, mut violated) = (0, 0);
    for _ in 0..1000 {
        let x = rng.unit_sphere(2) * (radius * rng.uniform().sqrt());
        let rep = strict_saddle_check(&obj, &x, eps, 0.5, 0.3, &minima).unwrap();
        strong += rep.clauses.strong_gradient as usize;
        violated += rep.violated() as usize;
    }
    assert!(strong >= 950, "{strong}/1000");
    assert_eq!(violated, 0);
}

#[test]
fn zero_trigger_matches_plain_gd() {
    let inst = gen_phase_retrieval(8, 100, 4).unwrap();
    let obj = PrObjective::new(&inst).unwrap();
    let mut rng = Rng::new(5);
    let x0 = rng.gaussian_vector(8);
    let eta = 0.05;
    let cfg = SaddleEscapeConfig { eta, g_thresh: 0.0, max_iters: 200, ..Default::default() };
    let (xp, tp) = perturbed_gd(&obj, &x0, &cfg).unwrap();
    let solver = SolverConfig { step: Step::Constant { eta }, max_iters: 200, ..Default::default() };
    let (xg, tg) = run_gd(&inst, &FactorPoint::Vector(x0), &solver).unwrap();
    assert!((&xp - xg.as_vector().unwrap()).norm() < 1e-12 * xp.norm());
    assert_eq!(tp.rows.len(), tg.rows.len());
    for (a, b) in tp.rows.iter().zip(&tg.rows) {
        assert!((a.loss - b.loss).abs() <= 1e-12 * b.loss.max(1e-300));
        assert!((a.dist - b.dist).abs() <= 1e-10);
    }
    assert!(tp.events.is_empty());
}

#[test]
fn saddle_escape_monte_carlo() {
    let obj = Rank1Mf::new(fig_matrix());
    let saddle = Vector::from_vec(vec![0.5, 0.5]);
    assert!(rank1_gradient(&obj.m, &saddle).norm() < 1e-15);
    let cfg = SaddleEscapeConfig { eta: 0.1, radius: 1e-3, g_thresh: 1e-8, cooldown: 100, max_iters: 2000, ..Default::default() };
    let summary = saddle_escape_experiment(&obj, &saddle, &cfg, 1e-6, 100).unwrap();
    assert!(!summary.vanilla_moved);
    assert!(summary.escaped >= 99, "{}/100", summary.escaped);

    let (_, tr) = perturbed_gd(&obj, &saddle, &cfg).unwrap();
    assert!(!tr.events.is_empty());
    assert_eq!(tr.events[0], 1);
    assert!(tr.events.windows(2).all(|w| w[1] >= w[0] + cfg.cooldown));
}

#[test]
fn random_init_converges_to_global_minimum() {
    // rank-1 factorization from random starts never stalls at a saddle
    let mut rng = Rng::new(6);
    let g = rng.gaussian_matrix(5, 5);
    let m = &g * g.transpose();
    let obj = Rank1Mf::new(m.clone());
    let l1 = lowrank_ncvx::linalg::spectral_norm(&m);
    let x_star = obj.x_star.clone().unwrap();
    // ‖∇²f‖ ≤ 3‖x‖² + λ₁ ≤ 4λ₁ while ‖x‖² ≤ λ₁
    let cfg = SaddleEscapeConfig {
        eta: 0.9 / (4.0 * l1),
        g_thresh: 0.0,
        max_iters: 20_000,
        stop: StopRule { dist_tol: Some(1e-8 * x_star.norm()), ..Default::default() },
        ..Default::default()
    };
    let mut ok = 0;
    for _ in 0..1000 {
        let x0 = rng.unit_sphere(5) * (l1.sqrt() * rng.uniform());
        let (_, tr) = perturbed_gd(&obj, &x0, &cfg).unwrap();
        if tr.final_dist() <= 1e-8 * x_star.norm() {
            ok += 1;
        }
    }
    assert_eq!(ok, 1000);
}

#[test]
fn sensing_has_no_spurious_minima() {
    let inst = gen_matrix_sensing(6, 6, 1, 3000, true, 7).unwrap();
    let delta = estimate_rip(&inst, 2, 200, 1).unwrap().delta_hat;
    assert!(delta < 0.1, "δ̂₂ = {delta}");
    let ProblemInstance::Sensing(s) = &inst else { unreachable!() };
    let obj = SensingRank1::new(&inst).unwrap();
    let scale = s.truth.m_star.norm();
    let cfg = SaddleEscapeConfig {
        eta: 0.1 / scale,
        g_thresh: 0.0,
        max_iters: 5000,
        stop: StopRule { grad_tol: Some(1e-10), ..Default::default() },
        ..Default::default()
    };
    let mut rng = Rng::new(8);
    let mut converged = 0;
    for _ in 0..200 {
        let x0 = rng.gaussian_vector(6) * (scale.sqrt() / 6f64.sqrt());
        let (x, tr) = perturbed_gd(&obj, &x0, &cfg).unwrap();
        if tr.last().unwrap().grad_norm < 1e-8 {
            converged += 1;
            assert!((&x * x.transpose() - &s.truth.m_star).norm() < 1e-6);
        }
    }
    assert!(converged >= 190, "{converged}/200");
}

#[test]
fn rank1_sensing_hessian_sandwich() {
    let inst = gen_matrix_sensing(5, 5, 1, 40_000, true, 7).unwrap();
    let delta = estimate_rip(&inst, 4, 200, 1).unwrap().delta_hat;
    assert!(delta <= 1.0 / 44.0, "δ̂₄ = {delta}");
    let obj = SensingRank1::new(&inst).unwrap();
    let ProblemInstance::Sensing(s) = &inst else { unreachable!() };
    let xs = s.truth.l.column(0).into_owned();
    let n2 = xs.norm_squared();
    let mut rng = Rng::new(10);
    for _ in 0..100 {
        let x = &xs + rng.unit_sphere(5) * (xs.norm() / 12.0 * rng.uniform().powf(0.2));
        let h = obj.hessian(&x);
        for _ in 0..100 {
            let z = rng.gaussian_vector(5);
            let q = z.dot(&(&h * &z)) / (z.norm_squared() * n2);
            assert!((0.25..=3.0).contains(&q), "{q}");
        }
    }
}

#[test]
fn trust_region_cases() {
    let h = Mat::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]);
    let g = Vector::from_vec(vec![0.1, -0.2]);
    let newton = -h.clone().lu().solve(&g).unwrap();
    let s = solve_trust_region(&g, &h, 10.0).unwrap();
    assert!((&s - &newton).norm() < 1e-12);

    let obj = Rank1Mf::new(fig_matrix());
    let saddle = Vector::from_vec(vec![0.5, 0.5]);
    let next = trust_region_step(&obj, &saddle, 0.2).unwrap();
    assert!(((&next - &saddle).norm() - 0.2).abs() < 1e-12);
    assert!(obj.value(&next) < obj.value(&saddle));
    let u = &next - &saddle;
    assert!((u[0] + u[1]).abs() < 1e-10, "step should follow (1, −1)");
}

/// Best of `k` points in the ball (half uniform in volume, half on the sphere),
/// polished by projected gradient descent.
fn ball_search(model: impl Fn(&Vector) -> f64, grad: impl Fn(&Vector) -> Vector, n: usize, delta: f64, k: usize, seed: u64) -> f64 {
    let mut rng = Rng::new(seed);
    let mut best = Vector::zeros(n);
    let mut best_v = model(&best);
    for i in 0..k {
        let dir = rng.unit_sphere(n);
        let s = if i % 2 == 0 { dir * (delta * rng.uniform().powf(1.0 / n as f64)) } else { dir * delta };
        let v = model(&s);
        if v < best_v {
            best_v = v;
            best = s;
        }
    }
    for _ in 0..5000 {
        let mut s = &best - grad(&best) * 1e-3;
        if s.norm() > delta {
            s *= delta / s.norm();
        }
        let v = model(&s);
        if v < best_v {
            best_v = v;
            best = s;
        }
    }
    best_v
}

#[test]
fn trust_region_matches_sampling() {
    let mut rng = Rng::new(11);
    for trial in 0..3 {
        let h = oracle::random_symmetric(4, &mut rng);
        let g = rng.gaussian_vector(4) * 0.5;
        let delta = 0.8;
        let s = solve_trust_region(&g, &h, delta).unwrap();
        assert!(s.norm() <= delta * (1.0 + 1e-12));
        let solver = quadratic_model(&g, &h, &s);
        let best = ball_search(|v| quadratic_model(&g, &h, v), |v| &g + &h * v, 4, delta, 1_000_000, 12 + trial);
        assert!(solver <= best + 1e-10 && best - solver < 1e-4, "solver {solver} oracle {best}");
    }
    // hard case: g ⟂ bottom eigenvector
    let h = Mat::from_diagonal(&Vector::from_vec(vec![1.0, 2.0, -1.0, 3.0]));
    let g = Vector::from_vec(vec![0.1, 0.1, 0.0, 0.1]);
    let s = solve_trust_region(&g, &h, 1.0).unwrap();
    assert!((s.norm() - 1.0).abs() < 1e-10);
    let best = ball_search(|v| quadratic_model(&g, &h, v), |v| &g + &h * v, 4, 1.0, 1_000_000, 20);
    assert!((quadratic_model(&g, &h, &s) - best).abs() < 1e-4);
}

/// f(x) = Σ a_i x_i³/6 + ½xᵀBx; its Hessian diag(a∘x) + B is max|a_i|-Lipschitz.
struct CubicTest {
    a: Vector,
    b: Mat,
}

impl Objective for CubicTest {
    fn dim(&self) -> usize {
        self.a.len()
    }
    fn value(&self, x: &Vector) -> f64 {
        self.a.iter().zip(x.iter()).map(|(a, v)| a * v.powi(3) / 6.0).sum::<f64>() + 0.5 * x.dot(&(&self.b * x))
    }
    fn gradient(&self, x: &Vector) -> Vector {
        Vector::from_iterator(x.len(), self.a.iter().zip(x.iter()).map(|(a, v)| a * v * v / 2.0)) + &self.b * x
    }
    fn hessian(&self, x: &Vector) -> Mat {
        Mat::from_diagonal(&self.a.component_mul(x)) + &self.b
    }
}

#[test]
fn cubic_regularization_cases() {
    let h = Mat::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]);
    let g = Vector::from_vec(vec![0.1, -0.2]);
    let newton = -h.clone().lu().solve(&g).unwrap();
    let s = solve_cubic(&g, &h, 1e-9).unwrap();
    assert!((&s - &newton).norm() < 1e-6);

    let mut rng = Rng::new(13);
    for _ in 0..50 {
        let obj = CubicTest { a: rng.gaussian_vector(3), b: oracle::random_symmetric(3, &mut rng) };
        let l2 = obj.a.amax();
        let x = rng.gaussian_vector(3);
        let next = cubic_step(&obj, &x, l2).unwrap();
        let step = &next - &x;
        let model = obj.value(&x) + cubic_model(&obj.gradient(&x), &obj.hessian(&x), l2, &step);
        assert!(obj.value(&next) <= model + 1e-10);
        assert!(model <= obj.value(&x) + 1e-12);
    }
}

#[test]
fn cubic_matches_random_search() {
    let mut rng = Rng::new(14);
    for trial in 0..3 {
        let h = oracle::random_symmetric(3, &mut rng);
        let g = rng.gaussian_vector(3);
        let l2 = 1.5;
        let s = solve_cubic(&g, &h, l2).unwrap();
        let solver = cubic_model(&g, &h, l2, &s);
        // the minimizer has ‖s‖ ≤ 2(|λ_min| + √(‖g‖L₂))/L₂
        let r = 2.0 * (oracle::jacobi_eigen(&h).0.iter().map(|v| v.abs()).fold(0.0, f64::max) + (g.norm() * l2).sqrt()) / l2;
        let grad = |v: &Vector| &g + &h * v + v * (0.5 * l2 * v.norm());
        let best = ball_search(|v| cubic_model(&g, &h, l2, v), grad, 3, r, 1_000_000, 15 + trial);
        assert!(solver <= best + 1e-10 && best - solver < 1e-4, "solver {solver} oracle {best}");
    }
}

#[test]
fn dense_guard_rejects_large_inputs() {
    let obj = Rank1Mf::new(Mat::identity(MAX_DENSE_DIM + 1, MAX_DENSE_DIM + 1));
    assert!(trust_region_step(&obj, &Vector::zeros(MAX_DENSE_DIM + 1), 0.1).is_err());
}

#[test]
fn random_init_phase_retrieval() {
    let cfg = RandomInitConfig { n: 64, trials: 100, seed: 1, ..Default::default() };
    let rep = random_init_gd_experiment(&cfg).unwrap();
    assert!(rep.successes >= 90, "{}/100", rep.successes);
    let again = random_init_trial(&cfg, rep.trials[0].seed).unwrap();
    assert_eq!(again, rep.trials[0]);
    for t in rep.trials.iter().filter(|t| t.success) {
        assert!(t.stage1.unwrap() <= t.stage2.unwrap());
    }
}

#[test]
fn random_init_stage_one_grows_slowly() {
    let mut medians = Vec::new();
    for n in [32, 64, 128, 256] {
        let cfg = RandomInitConfig { n, trials: 20, seed: 2, ..Default::default() };
        let rep = random_init_gd_experiment(&cfg).unwrap();
        medians.push(rep.median_stage1.unwrap());
    }
    for w in medians.windows(2) {
        assert!(w[1] / w[0] < 1.6, "{medians:?}");
    }
}

#[test]
fn overparam_zero_start_is_stationary() {
    let inst = gen_phase_retrieval(8, 64, 1).unwrap();
    let res = overparam_gd_experiment(&inst, &OverparamConfig { init_scale: 0.0, max_iters: 20, ..Default::default() }).unwrap();
    assert_eq!(res.x, Mat::zeros(8, 8));
    assert_eq!(res.effective_rank, 0);
}

fn overparam_trials(trials: u64) -> (usize, usize) {
    let (mut ok, mut rank1) = (0, 0);
    for seed in 0..trials {
        let inst = gen_phase_retrieval(32, 8 * 32, seed).unwrap();
        let cfg = OverparamConfig { init_scale: 1e-3, max_iters: 5000, seed, ..Default::default() };
        let res = overparam_gd_experiment(&inst, &cfg).unwrap();
        if res.rel_error < 1e-2 {
            ok += 1;
            rank1 += (res.effective_rank == 1) as usize;
        }
    }
    (ok, rank1)
}

#[test]
fn overparam_phase_retrieval() {
    let (ok, _) = overparam_trials(100);
    assert!(ok >= 80, "{ok}/100");
}

#[test]
#[ignore = "residual spurious directions decay sublinearly from a small start; see notes"]
fn overparam_successes_are_rank_one() {
    let (ok, rank1) = overparam_trials(100);
    assert_eq!(rank1, ok);
}
