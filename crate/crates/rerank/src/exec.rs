use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};
use rerank_core::exec::Executor;

use crate::{Error, Result};

/// Runs per-query work on a dedicated rayon pool. Results come back in
/// input order, so output is identical for any thread count.
pub struct RayonExecutor {
    pool: ThreadPool,
}

impl RayonExecutor {
    /// `threads == 0` uses one thread per available core.
    pub fn new(threads: usize) -> Result<Self> {
        let pool = ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Usage(format!("cannot start {threads} worker threads: {e}")))?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for RayonExecutor {
    fn map<I, T, F>(&self, items: &[I], f: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&I) -> T + Sync + Send,
    {
        self.pool.install(|| items.par_iter().map(f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_input_order() {
        let items: Vec<u64> = (0..1000).collect();
        let exec = RayonExecutor::new(4).unwrap();
        assert_eq!(exec.threads(), 4);
        let out = exec.map(&items, |x| x * x);
        assert_eq!(out, items.iter().map(|x| x * x).collect::<Vec<_>>());
        let err = exec.try_map(&items, |&x| {
            if x % 300 == 299 {
                Err(rerank_core::Error::Invalid(format!("{x}")))
            } else {
                Ok(x)
            }
        });
        assert_eq!(err.unwrap_err(), rerank_core::Error::Invalid("299".into()));
    }
}
