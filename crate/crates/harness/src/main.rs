use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use lowrank_ncvx_harness::acceptance::run_suite;
use lowrank_ncvx_harness::config::{ConfigError, Experiment, ExperimentConfig};
use lowrank_ncvx_harness::experiments::{run_config, solve_instance};
use lowrank_ncvx_harness::{resolve_threads, with_pool};

#[derive(Parser)]
#[command(name = "lowrank-ncvx", version, about = "Nonconvex low-rank recovery experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config (default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; falls back to the config, then LOWRANK_NCVX_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy, PartialEq)]
enum Cmd {
    /// Write the problem instance of a solve config as JSON.
    Gen,
    /// Run one solve config: trace CSV and summary JSON.
    Solve,
    /// Phase-transition grid.
    Grid,
    /// Spectral cosine curve against m/n.
    RhoCurve,
    /// Critical-point report of a rank-1 factorization landscape.
    Landscape,
    /// Initializer comparison on paired seeds.
    InitCompare,
    /// Run the acceptance suite; exits nonzero if any criterion fails.
    Accept,
}

impl Cmd {
    fn kind(self) -> &'static str {
        match self {
            Cmd::Gen | Cmd::Solve => "solve",
            Cmd::Grid => "phase_transition",
            Cmd::RhoCurve => "rho_curve",
            Cmd::Landscape => "landscape",
            Cmd::InitCompare => "init_compare",
            Cmd::Accept => "acceptance",
        }
    }
}

fn load(cli: &Cli) -> Result<Option<ExperimentConfig>> {
    let Some(path) = &cli.config else {
        if cli.cmd == Cmd::Accept {
            return Ok(None);
        }
        return Err(ConfigError("--config is required for this command".into()).into());
    };
    let cfg = ExperimentConfig::load(path)?;
    if cfg.experiment.kind() != cli.cmd.kind() {
        let msg = format!("experiment.kind is `{}`, but this command runs `{}`", cfg.experiment.kind(), cli.cmd.kind());
        return Err(ConfigError(msg).into());
    }
    Ok(Some(cfg))
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = load(cli)?;
    let seed = cli.seed.or(cfg.as_ref().map(|c| c.seed)).unwrap_or(0);
    let out = cli.out.clone().or(cfg.as_ref().and_then(|c| c.out.clone())).unwrap_or_else(|| PathBuf::from("out"));
    let threads = resolve_threads(cli.threads, cfg.as_ref().and_then(|c| c.threads))?;
    match cli.cmd {
        Cmd::Accept => with_pool(threads, || {
            let results = run_suite(seed, &out, &mut |r| println!("{}", r.line()))?;
            let passed = results.iter().filter(|r| r.ok()).count();
            println!("{passed}/{} criteria passed; results in {}", results.len(), out.display());
            Ok(passed == results.len())
        })?,
        Cmd::Gen => {
            let mut cfg = cfg.expect("loaded");
            cfg.seed = seed;
            let Experiment::Solve(spec) = &cfg.experiment else { unreachable!("kind checked") };
            if spec.problem.is_none() {
                return Err(ConfigError("gen needs `problem` in the solve config".into()).into());
            }
            let inst = solve_instance(&cfg, spec)?;
            std::fs::create_dir_all(&out)?;
            let path = out.join("instance.json");
            std::fs::write(&path, serde_json::to_string(&inst)? + "\n")?;
            println!("{}", path.display());
            Ok(true)
        }
        _ => {
            let mut cfg = cfg.expect("loaded");
            cfg.seed = seed;
            let files = with_pool(threads, || run_config(&cfg, &out))??;
            for f in files {
                println!("{}", f.display());
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
