use lowrank_ncvx_harness::config::{CompareSpec, Experiment, ExperimentConfig, GridSpec};
use lowrank_ncvx_harness::experiments::{compare_csv, grid_csv, init_compare, phase_transition, run_config};
use lowrank_ncvx_harness::output::read_csv;
use lowrank_ncvx_harness::with_pool;

fn grid(json: &str) -> (GridSpec, u64) {
    let cfg = ExperimentConfig::from_json(json).unwrap();
    match cfg.experiment {
        Experiment::PhaseTransition(g) => (g, cfg.seed),
        other => panic!("not a grid: {other:?}"),
    }
}

fn compare(json: &str) -> (CompareSpec, u64) {
    let cfg = ExperimentConfig::from_json(json).unwrap();
    match cfg.experiment {
        Experiment::InitCompare(c) => (c, cfg.seed),
        other => panic!("not an init comparison: {other:?}"),
    }
}

/// Largest amount by which a later rate falls below an earlier one.
fn max_monotone_violation(rates: &[f64]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let mut worst: f64 = 0.0;
    for &r in rates {
        best = best.max(r);
        worst = worst.max(best - r);
    }
    worst
}

#[test]
fn trivial_cell_succeeds_everywhere() {
    let (g, seed) = grid(
        r#"{"seed": 11, "experiment": {"kind": "phase_transition",
            "problem": {"family": "phase_retrieval", "n": 16, "m": 16},
            "axes": [{"param": "m_over_n", "values": [50]}], "trials": 20}}"#,
    );
    let res = phase_transition(&g, seed).unwrap();
    assert_eq!(res.rows.len(), 1);
    assert_eq!(res.rows[0].success_rate, 1.0);
    assert_eq!(res.rows[0].diverged, 0);
}

#[test]
fn pr_success_is_monotone_in_oversampling() {
    let (g, seed) = grid(
        r#"{"seed": 5, "experiment": {"kind": "phase_transition",
            "problem": {"family": "phase_retrieval", "n": 24, "m": 24},
            "axes": [{"param": "m_over_n", "values": [1.5, 2.5, 3.5, 5, 8]}], "trials": 100,
            "solver": {"method": "gd", "config": {"max_iters": 600}}}}"#,
    );
    let res = phase_transition(&g, seed).unwrap();
    let rates: Vec<f64> = res.rows.iter().map(|r| r.success_rate).collect();
    println!("pr rates {rates:?}");
    assert!(max_monotone_violation(&rates) <= 0.1, "{rates:?}");
    assert!(rates[0] < 0.5 && rates[4] >= 0.9, "{rates:?}");
}

#[test]
fn mc_success_is_monotone_in_sampling_rate() {
    let (g, seed) = grid(
        r#"{"seed": 6, "experiment": {"kind": "phase_transition",
            "problem": {"family": "completion", "n": 40, "r": 2, "p": 0.5},
            "axes": [{"param": "p", "values": [0.05, 0.1, 0.2, 0.35, 0.6]}], "trials": 100,
            "solver": {"method": "gd", "config": {"max_iters": 600}}}}"#,
    );
    let res = phase_transition(&g, seed).unwrap();
    let rates: Vec<f64> = res.rows.iter().map(|r| r.success_rate).collect();
    println!("mc rates {rates:?}");
    assert!(max_monotone_violation(&rates) <= 0.1, "{rates:?}");
    assert!(rates[0] < 0.5 && rates[4] >= 0.9, "{rates:?}");
}

#[test]
fn grid_is_independent_of_thread_count() {
    let (g, seed) = grid(
        r#"{"seed": 9, "experiment": {"kind": "phase_transition",
            "problem": {"family": "phase_retrieval", "n": 8, "m": 8},
            "axes": [{"param": "m_over_n", "values": [2, 6]}, {"param": "n", "values": [8, 10]}], "trials": 6,
            "solver": {"method": "gd", "config": {"max_iters": 200}}}}"#,
    );
    let one = with_pool(Some(1), || grid_csv(&phase_transition(&g, seed).unwrap()).unwrap()).unwrap();
    let three = with_pool(Some(3), || grid_csv(&phase_transition(&g, seed).unwrap()).unwrap()).unwrap();
    assert_eq!(one, three);
    let (_, rows) = read_csv(&one).unwrap();
    // first axis varies slowest
    let firsts: Vec<&str> = rows.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(firsts, ["2.0", "2.0", "6.0", "6.0"]);
}

#[test]
fn identical_inits_give_identical_columns() {
    let (c, seed) = compare(
        r#"{"seed": 4, "experiment": {"kind": "init_compare",
            "problem": {"family": "phase_retrieval", "n": 16, "m": 96},
            "inits": [{"kind": "spectral", "prep": {"kind": "trim", "gamma": 3}},
                      {"kind": "spectral", "prep": {"kind": "trim", "gamma": 3}}],
            "trials": 12, "solver": {"method": "gd", "config": {"max_iters": 200}}}}"#,
    );
    let rows = init_compare(&c, seed).unwrap();
    assert_eq!(rows.len(), 2);
    let (a, b) = (&rows[0], &rows[1]);
    assert_eq!(a.init, b.init);
    assert_eq!(a.success_rate, b.success_rate);
    assert_eq!(a.mean_rho.to_bits(), b.mean_rho.to_bits());
    assert_eq!(a.median_init_dist.to_bits(), b.median_init_dist.to_bits());
    assert_eq!(a.median_iters, b.median_iters);
    let (header, parsed) = read_csv(&compare_csv(&[], &rows).unwrap()).unwrap();
    let col = header.iter().position(|h| h == "mean_rho").unwrap();
    assert_eq!(parsed[0][col], parsed[1][col]);
}

#[test]
fn optimal_preprocessing_is_not_worse_than_subset() {
    // Only the spectral stage matters here, so the refinement is one step.
    let (c, seed) = compare(
        r#"{"seed": 8, "experiment": {"kind": "init_compare",
            "problem": {"family": "phase_retrieval", "n": 64, "m": 256},
            "inits": [{"kind": "spectral", "prep": {"kind": "optimal_uniform"}},
                      {"kind": "spectral", "prep": {"kind": "subset", "c": 0.16666666666666666}}],
            "axes": [{"param": "m_over_n", "values": [2, 4, 8]}],
            "trials": 200, "solver": {"method": "gd", "config": {"max_iters": 1}}}}"#,
    );
    let rows = init_compare(&c, seed).unwrap();
    for pair in rows.chunks(2) {
        println!("m/n={} T* {:.4} subset {:.4}", pair[0].values[0], pair[0].mean_rho, pair[1].mean_rho);
        assert!(pair[0].mean_rho >= pair[1].mean_rho - 0.02, "{pair:?}");
    }
}

#[test]
#[ignore = "trim(3) start is worse than identity at m = 6n; see the decisions ledger"]
fn trim_beats_identity_at_low_oversampling() {
    let (c, seed) = compare(
        r#"{"seed": 10, "experiment": {"kind": "init_compare",
            "problem": {"family": "phase_retrieval", "n": 64, "m": 384},
            "inits": [{"kind": "spectral", "prep": {"kind": "trim", "gamma": 3}},
                      {"kind": "spectral", "prep": {"kind": "identity"}}],
            "trials": 200, "solver": {"method": "gd", "config": {"max_iters": 1000}}}}"#,
    );
    let rows = init_compare(&c, seed).unwrap();
    assert!(rows[0].success_rate >= rows[1].success_rate + 0.05, "{rows:?}");
}

#[test]
fn run_config_writes_parseable_outputs() {
    let dir = std::env::temp_dir().join(format!("lowrank-ncvx-exp-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    let cfg = ExperimentConfig::from_json(
        r#"{"seed": 2, "experiment": {"kind": "init_compare",
            "problem": {"family": "completion", "n": 20, "r": 2, "p": 0.6},
            "inits": [{"kind": "spectral"}, {"kind": "random", "scale": 1.0}, {"kind": "truth"}],
            "trials": 4}}"#,
    )
    .unwrap();
    let files = run_config(&cfg, &dir).unwrap();
    assert_eq!(files, [dir.join("init_compare.csv")]);
    let (header, rows) = read_csv(&std::fs::read_to_string(&files[0]).unwrap()).unwrap();
    assert_eq!(rows.len(), 3);
    let sr = header.iter().position(|h| h == "success_rate").unwrap();
    let dist = header.iter().position(|h| h == "median_init_dist").unwrap();
    assert_eq!(rows[2][sr], "1.0");
    assert!(rows[2][dist].parse::<f64>().unwrap() < 1e-12);
    let _ = std::fs::remove_dir_all(&dir);
}
