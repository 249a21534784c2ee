//! Thread-pool execution of harness work units.

use rayon::prelude::*;
use regret_design_core::numerics::Executor;

use crate::error::CliError;

/// Caps worker threads; unset or `0` means one per core.
pub const THREADS_ENV: &str = "REGRET_DESIGN_THREADS";

/// Runs work units on a dedicated rayon pool. Results come back in index
/// order, so output does not depend on the thread count.
pub struct RayonExecutor {
    pool: rayon::ThreadPool,
}

impl RayonExecutor {
    /// `threads == 0` lets rayon pick.
    pub fn new(threads: usize) -> Result<Self, CliError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))?;
        Ok(Self { pool })
    }

    /// Reads the thread cap from the environment.
    pub fn from_env() -> Result<Self, CliError> {
        Self::new(threads_from(std::env::var(THREADS_ENV).ok().as_deref())?)
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

pub(crate) fn threads_from(value: Option<&str>) -> Result<usize, CliError> {
    match value.map(str::trim) {
        None | Some("") => Ok(0),
        Some(v) => v.parse().map_err(|_| {
            CliError::config(
                THREADS_ENV,
                format!("expected a non-negative integer, got {v:?}"),
            )
        }),
    }
}

impl Executor for RayonExecutor {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        self.pool
            .install(|| (0..n).into_par_iter().map(&f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_are_in_index_order() {
        let exec = RayonExecutor::new(4).unwrap();
        let out = exec.map(1000, |i| i * i);
        assert!(out.iter().enumerate().all(|(i, v)| *v == i * i));
    }

    #[test]
    fn thread_variable_parsing() {
        assert_eq!(threads_from(None).unwrap(), 0);
        assert_eq!(threads_from(Some(" 3 ")).unwrap(), 3);
        let err = threads_from(Some("many")).unwrap_err();
        assert!(err.to_string().contains(THREADS_ENV));
    }
}
