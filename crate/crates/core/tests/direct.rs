use lowrank_ncvx::direct::*;
use lowrank_ncvx::gd::StopRule;
use lowrank_ncvx::problems::*;
use lowrank_ncvx::spectral::*;
use lowrank_ncvx::{CVector, FactorPoint, Mat, ProblemInstance, Rng};
use num_complex::Complex64;

fn left_basis(est: &SpectralEstimate) -> Mat {
    match &est.subspaces {
        Subspaces::Real(s) => s[0].basis.clone(),
        Subspaces::Complex(_) => unreachable!(),
    }
}

#[test]
fn altmin_identity_operator_is_exact_after_two_updates() {
    let mut rng = Rng::new(1);
    let truth = low_rank_truth(7, 5, 2, false, &Spectrum::Gaussian, &mut rng).unwrap();
    let m_star = truth.m_star.clone();
    let inst = ProblemInstance::Sensing(SensingInstance::identity_operator(truth, false));
    let l0 = rng.gaussian_matrix(7, 2);
    let cfg = AltMinConfig { max_outer: 1, ..Default::default() };
    let (l, r, tr) = altmin_sensing(&inst, &l0, &cfg).unwrap();
    assert_eq!(tr.rows.len(), 3);
    assert!((&l * r.transpose() - &m_star).norm() < 1e-10 * m_star.norm());
    assert!(tr.rows[1].dist > 1e-3, "one half-step is generally not enough");
}

#[test]
fn altmin_sensing_monte_carlo() {
    let (n, r) = (20, 2);
    let mut ok = 0;
    for seed in 0..100u64 {
        let inst = gen_matrix_sensing(n, n, r, 12 * n * r, false, seed).unwrap();
        let ProblemInstance::Sensing(s) = &inst else { unreachable!() };
        let l0 = left_basis(&init_sensing(&inst, r).unwrap());
        let cfg = AltMinConfig { max_outer: 30, ..Default::default() };
        let (l, rr, tr) = altmin_sensing(&inst, &l0, &cfg).unwrap();
        for w in tr.rows.windows(2) {
            assert!(w[1].loss <= w[0].loss * (1.0 + 1e-9) + 1e-24, "seed {seed}");
        }
        if (&s.truth.m_star - &l * rr.transpose()).norm() <= 1e-8 {
            ok += 1;
        }
    }
    assert!(ok >= 90, "{ok}/100");
}

#[test]
fn altmin_rejects_wrong_family_and_shape() {
    let sym = gen_matrix_sensing(5, 5, 1, 40, true, 1).unwrap();
    assert!(altmin_sensing(&sym, &Mat::zeros(5, 1), &AltMinConfig::default()).is_err());
    let asym = gen_matrix_sensing(5, 4, 1, 40, false, 1).unwrap();
    assert!(altmin_sensing(&asym, &Mat::zeros(4, 1), &AltMinConfig::default()).is_err());
    assert!(AltMinConfig { variant: AltMinVariant::SampleSplit { parts: 0 }, ..Default::default() }.validate().is_err());
}

#[test]
fn altmin_completion_full_observation_one_iteration() {
    let inst = gen_matrix_completion(10, 8, 2, 1.0, false, 2).unwrap();
    let ProblemInstance::Completion(c) = &inst else { unreachable!() };
    let l0 = left_basis(&init_matrix_completion(&inst, 2).unwrap());
    let cfg = AltMinConfig { max_outer: 1, ..Default::default() };
    let (l, r, _) = altmin_mc(&inst, &l0, &cfg).unwrap();
    assert!((&l * r.transpose() - &c.truth.m_star).norm() < 1e-10 * c.truth.m_star.norm());
}

fn completion_rel_err(c: &McInstance, l: &Mat, r: &Mat) -> f64 {
    (&c.truth.m_star - l * r.transpose()).norm() / c.truth.m_star.norm()
}

#[test]
fn altmin_completion_monte_carlo() {
    let mut ok = 0;
    for seed in 0..100u64 {
        let inst = gen_matrix_completion(60, 60, 2, 0.35, false, seed).unwrap();
        let ProblemInstance::Completion(c) = &inst else { unreachable!() };
        let l0 = left_basis(&init_matrix_completion(&inst, 2).unwrap());
        let (l, r, tr) = altmin_mc(&inst, &l0, &AltMinConfig::default()).unwrap();
        for w in tr.rows.windows(2) {
            assert!(w[1].loss <= w[0].loss * (1.0 + 1e-9) + 1e-24, "seed {seed}");
        }
        if completion_rel_err(c, &l, &r) < 1e-6 {
            ok += 1;
        }
    }
    assert!(ok >= 85, "{ok}/100");
}

#[test]
fn altmin_completion_variants() {
    let inst = gen_matrix_completion(40, 40, 2, 0.5, false, 5).unwrap();
    let ProblemInstance::Completion(c) = &inst else { unreachable!() };
    let l0 = left_basis(&init_matrix_completion(&inst, 2).unwrap());
    let split = AltMinConfig { variant: AltMinVariant::SampleSplit { parts: 2 }, max_outer: 40, ..Default::default() };
    let (l, r, _) = altmin_mc(&inst, &l0, &split).unwrap();
    assert!(completion_rel_err(c, &l, &r) < 1e-6);
    // penalty levels scale with ‖L₀‖, so start from the balanced factor
    let FactorPoint::Asym { l: l0, .. } = init_matrix_completion(&inst, 2).unwrap().point else { unreachable!() };
    let reg = AltMinConfig { variant: AltMinVariant::Regularized { lambda: 1e-3 }, max_outer: 30, ..Default::default() };
    let (l, r, _) = altmin_mc(&inst, &l0, &reg).unwrap();
    let e = completion_rel_err(c, &l, &r);
    assert!(e < 1e-2, "{e}");
}

#[test]
fn error_reduction_fixed_point_and_monotone() {
    let inst = gen_phase_retrieval(10, 80, 1).unwrap();
    let ProblemInstance::PhaseRetrieval(p) = &inst else { unreachable!() };
    let (x, _) = er_phase_retrieval(&inst, &p.x_star, &ErConfig { max_iters: 5, ..Default::default() }).unwrap();
    assert!((&x - &p.x_star).norm() < 1e-12);
    for seed in 0..20 {
        let inst = gen_phase_retrieval(16, 128, seed).unwrap();
        let x0 = init_phase_retrieval(&inst, &Preprocessing::Identity).unwrap().point;
        let (_, tr) = er_phase_retrieval(&inst, x0.as_vector().unwrap(), &ErConfig::default()).unwrap();
        for w in tr.rows.windows(2) {
            assert!(w[1].loss <= w[0].loss * (1.0 + 1e-12) + 1e-30, "seed {seed} iter {}", w[1].iter);
        }
    }
}

#[test]
fn error_reduction_monte_carlo() {
    let n = 64;
    let mut ok = 0;
    for seed in 0..100u64 {
        let inst = gen_phase_retrieval(n, 8 * n, seed).unwrap();
        let x0 = init_phase_retrieval(&inst, &Preprocessing::Identity).unwrap().point;
        let cfg = ErConfig { max_iters: 100, stop: StopRule { dist_tol: Some(1e-6 * inst.truth_scale()), ..Default::default() } };
        let (_, tr) = er_phase_retrieval(&inst, x0.as_vector().unwrap(), &cfg).unwrap();
        if tr.final_dist() < 1e-6 * inst.truth_scale() {
            ok += 1;
        }
    }
    assert!(ok >= 90, "{ok}/100");
}

#[test]
fn svp_identity_operator_one_step() {
    let mut rng = Rng::new(3);
    let truth = low_rank_truth(6, 6, 2, false, &Spectrum::Gaussian, &mut rng).unwrap();
    let inst = ProblemInstance::Sensing(SensingInstance::identity_operator(truth, false));
    let cfg = SvpConfig { r: 2, eta: Some(1.0), tol: 1e-10, ..Default::default() };
    let (it, tr) = svp(&inst, &cfg).unwrap();
    assert_eq!(tr.iters(), 1);
    assert!(it.rank() <= 2);
}

#[test]
fn svp_sensing_contracts_under_rip() {
    let mut ok = 0;
    let mut tested = 0;
    for seed in 0..20u64 {
        let inst = gen_matrix_sensing(8, 8, 1, 600, false, seed).unwrap();
        if estimate_rip(&inst, 2, 200, seed).unwrap().delta_hat >= 1.0 / 3.0 {
            continue;
        }
        tested += 1;
        let cfg = SvpConfig { r: 1, max_iters: 100, tol: 1e-12, seed, ..Default::default() };
        let (it, tr) = svp(&inst, &cfg).unwrap();
        assert!(it.rank() <= 1);
        let d: Vec<f64> = tr.rows.iter().map(|r| r.dist).filter(|&d| d > 1e-10).collect();
        let contracting = d.len() > 3 && d.windows(2).skip(1).all(|w| w[1] <= 0.9 * w[0]);
        if contracting && tr.rows.last().unwrap().incoh <= 1e-12 {
            ok += 1;
        }
    }
    assert!(tested >= 10, "only {tested} instances with small δ̂");
    assert!(ok * 10 >= tested * 9, "{ok}/{tested}");
}

#[test]
fn svp_completion_monte_carlo() {
    let (n, r) = (80.0f64, 2.0f64);
    let p = (40.0 * r * r * n * n.ln() / 6.0 / (n * n)).min(1.0);
    let mut ok = 0;
    for seed in 0..100u64 {
        let inst = gen_matrix_completion(80, 80, 2, p, false, seed).unwrap();
        let (it, tr) = svp(&inst, &SvpConfig { r: 2, ..Default::default() }).unwrap();
        assert!(it.rank() <= 2);
        if tr.rows.last().unwrap().incoh <= 1e-6 {
            ok += 1;
        }
    }
    assert!(ok >= 85, "{ok}/100");
}

#[test]
fn svp_completion_below_full_observation() {
    let mut ok = 0;
    for seed in 0..20u64 {
        let inst = gen_matrix_completion(60, 60, 2, 0.5, false, seed).unwrap();
        let (it, tr) = svp(&inst, &SvpConfig { r: 2, eta: Some(1.0), max_iters: 300, ..Default::default() }).unwrap();
        assert!(it.rank() <= 2);
        if tr.rows.last().unwrap().incoh <= 1e-6 {
            ok += 1;
        }
    }
    assert!(ok >= 17, "{ok}/20");
}

#[test]
fn ppm_noiseless_fixed_point_and_feasibility() {
    let inst = gen_phase_sync(12, 0.0, 1).unwrap();
    let ProblemInstance::PhaseSync(p) = &inst else { unreachable!() };
    let rot = Complex64::from_polar(1.0, 0.7);
    let x0 = FactorPoint::ComplexVector(&p.x_star * rot);
    let (x, _) = ppm(&inst, &x0, 1.0, 10).unwrap();
    let FactorPoint::ComplexVector(x) = x else { unreachable!() };
    assert!(aligned_phase_error(&x, &p.x_star) < 1e-12);

    let noisy = gen_phase_sync(20, 2.0, 2).unwrap();
    let mut rng = Rng::new(3);
    let x0 = FactorPoint::ComplexVector(CVector::from_fn(20, |_, _| rng.complex_normal()));
    let (x, tr) = ppm(&noisy, &x0, 1e6, 50).unwrap();
    let FactorPoint::ComplexVector(x) = x else { unreachable!() };
    assert!(x.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    // loss is −xᴴLx
    for w in tr.rows.windows(2).skip(1) {
        assert!(w[1].loss <= w[0].loss + 1e-9 * w[0].loss.abs());
    }
}

#[test]
fn phase_sync_monte_carlo() {
    let n = 40usize;
    let sigma = 0.3 * (n as f64 / (n as f64).ln()).sqrt();
    let mut ok = 0;
    for seed in 0..100u64 {
        let inst = gen_phase_sync(n, sigma, seed).unwrap();
        let (mle, cert) = phase_sync_mle(&inst, 5000).unwrap();
        let x0 = init_phase_sync(&inst).unwrap();
        let (x, _) = ppm(&inst, &x0, 1.0, 100).unwrap();
        let FactorPoint::ComplexVector(x) = x else { unreachable!() };
        if cert.certified && aligned_phase_error(&x, &mle) < 1e-3 {
            ok += 1;
        }
    }
    assert!(ok >= 85, "{ok}/100");
}

#[test]
fn joint_alignment_iterates_are_vertices() {
    let inst = gen_joint_alignment(8, 3, 0.2, 4).unwrap();
    let mut rng = Rng::new(5);
    let x0 = FactorPoint::Vector(rng.gaussian_vector(24));
    let (x, tr) = ppm(&inst, &x0, 1.0, 30).unwrap();
    let x = x.as_vector().unwrap();
    for i in 0..8 {
        let block: Vec<f64> = (0..3).map(|a| x[i * 3 + a]).collect();
        assert_eq!(block.iter().filter(|&&v| v == 1.0).count(), 1);
        assert_eq!(block.iter().filter(|&&v| v == 0.0).count(), 2);
    }
    assert!(!tr.rows.is_empty());
    assert!(ppm(&inst, &FactorPoint::Vector(rng.gaussian_vector(23)), 1.0, 3).is_err());
}

#[test]
fn joint_alignment_monte_carlo() {
    let (n, m) = (12, 3);
    let mut ok = 0;
    for seed in 0..100u64 {
        let inst = gen_joint_alignment(n, m, 0.05, seed).unwrap();
        let ProblemInstance::JointAlignment(j) = &inst else { unreachable!() };
        let x0 = FactorPoint::Vector(init_joint_alignment(&inst).unwrap());
        let (x, _) = ppm(&inst, &x0, 1.0, 100).unwrap();
        let labels = unlift_labels(x.as_vector().unwrap(), m).unwrap();
        if labels_equal_mod_shift(&labels, &j.x_star, m) {
            ok += 1;
        }
    }
    assert!(ok >= 85, "{ok}/100");
}
