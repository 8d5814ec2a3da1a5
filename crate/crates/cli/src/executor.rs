//! Rayon-backed trial executor.

use fourier_debias::experiments::TrialExecutor;
use rayon::prelude::*;

use crate::error::{CliError, CliResult};

pub const THREADS_ENV: &str = "FOURIER_DEBIAS_THREADS";

/// Runs trials on a dedicated pool. Each trial seeds its own generator and
/// results are collected in trial order, so output does not depend on the
/// number of workers.
#[derive(Debug)]
pub struct RayonExecutor {
    pool: rayon::ThreadPool,
}

impl RayonExecutor {
    /// `threads = None` uses rayon's default (one worker per logical CPU).
    pub fn new(threads: Option<usize>) -> CliResult<Self> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = threads {
            if t == 0 {
                return Err(CliError::usage("worker count must be at least 1"));
            }
            builder = builder.num_threads(t);
        }
        let pool = builder
            .build()
            .map_err(|e| CliError::usage(format!("cannot start worker pool: {e}")))?;
        Ok(Self { pool })
    }

    /// Worker count taken from `FOURIER_DEBIAS_THREADS` when set.
    pub fn from_env() -> CliResult<Self> {
        let threads = match std::env::var(THREADS_ENV) {
            Ok(v) => {
                let t: usize = v.trim().parse().map_err(|_| {
                    CliError::usage(format!(
                        "{THREADS_ENV} must be a positive integer, got `{v}`"
                    ))
                })?;
                Some(t)
            }
            Err(_) => None,
        };
        Self::new(threads)
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl TrialExecutor for RayonExecutor {
    fn map_trials<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool
            .install(|| (0..count).into_par_iter().map(&f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_trial_order() {
        let exec = RayonExecutor::new(Some(3)).unwrap();
        assert_eq!(exec.workers(), 3);
        let out = exec.map_trials(1000, |t| t * t);
        assert!(out.iter().enumerate().all(|(i, v)| *v == i * i));
    }

    #[test]
    fn zero_workers_rejected() {
        assert!(RayonExecutor::new(Some(0)).is_err());
    }
}
