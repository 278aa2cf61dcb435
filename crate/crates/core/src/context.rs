use crate::error::{Error, Result};
use crate::oracle::{Oracle, OracleError, Similarity};
use crate::program::{Limits, LlmHost};

/// Shared handles for one pipeline run.
#[derive(Clone, Copy)]
pub struct Context<'a> {
    pub oracle: &'a Oracle,
    pub similarity: &'a dyn Similarity,
    pub limits: Limits,
}

impl<'a> Context<'a> {
    pub fn new(oracle: &'a Oracle, similarity: &'a dyn Similarity) -> Self {
        Self {
            oracle,
            similarity,
            limits: Limits::default(),
        }
    }

    pub fn with_limits(mut self, limits: Limits) -> Self {
        self.limits = limits;
        self
    }

    pub fn host(&self) -> LlmHost<'a> {
        LlmHost::new(self.oracle)
    }

    /// Converts a backend outage seen during program execution into an error.
    pub(crate) fn check_host(&self, host: &LlmHost<'_>) -> Result<()> {
        match host.backend_failure() {
            Some(msg) => Err(Error::Oracle(OracleError::Unavailable(msg))),
            None => Ok(()),
        }
    }
}

/// Maps `f` over `items` on a dedicated pool of `concurrency` threads,
/// keeping input order. The first error wins.
pub fn par_map<T, R, F>(items: &[T], concurrency: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(concurrency.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    pool.install(|| items.par_iter().map(&f).collect())
}
