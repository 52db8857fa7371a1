//! Experiment harness for the `lowrank_ncvx` solvers: JSON configs,
//! Monte Carlo grids, trace export and the acceptance suite.

pub mod acceptance;
pub mod config;
pub mod experiments;
pub mod output;

use config::ConfigError;

pub const THREADS_ENV: &str = "LOWRANK_NCVX_THREADS";

/// Worker count: flag, then config, then `LOWRANK_NCVX_THREADS`. None leaves
/// the choice to rayon.
pub fn resolve_threads(flag: Option<usize>, config: Option<usize>) -> Result<Option<usize>, ConfigError> {
    if let Some(n) = flag.or(config) {
        return if n == 0 { Err(ConfigError("--threads must be at least 1".into())) } else { Ok(Some(n)) };
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(ConfigError(format!("{THREADS_ENV}={v:?} is not a positive integer"))),
        },
        Err(_) => Ok(None),
    }
}

/// Runs `f` on a dedicated pool with `threads` workers.
pub fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> anyhow::Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    Ok(b.build()?.install(f))
}
