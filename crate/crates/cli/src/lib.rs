//! Batch front end for `parahyp-core`: JSON run configs, deterministic CSV
//! and JSON outputs, rayon-parallel evaluation, and the bundled self test.

pub mod commands;
pub mod config;
pub mod error;
pub mod selftest;

pub use commands::{cmd_converge, cmd_scan, cmd_solve, cmd_verify};
pub use config::RunConfig;
pub use error::CliError;

/// Environment variable that overrides the worker thread count.
pub const THREADS_ENV: &str = "PARAHYP_THREADS";

/// Thread count from `--threads`, else the environment, else rayon's default.
pub fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| CliError::Config(format!("{THREADS_ENV} must be a thread count, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

/// Runs `job` on a dedicated pool of `threads` workers.
pub fn with_threads<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Config("thread count must be >= 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Config(format!("cannot start thread pool: {e}")))?;
    Ok(pool.install(job))
}
