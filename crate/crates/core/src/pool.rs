//! Fixed-size worker pool with order-preserving parallel map.
//!
//! Results come back in input order whatever the worker count, so callers
//! that reduce them sequentially get identical output for 1 or N workers.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

#[derive(Clone)]
pub struct WorkerPool {
    workers: usize,
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl WorkerPool {
    /// `workers == 0` means one worker per available CPU.
    pub fn new(workers: usize) -> Self {
        let workers = if workers == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            workers
        };
        let pool = (workers > 1).then(|| {
            Arc::new(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .thread_name(|i| format!("causalis-worker-{i}"))
                    .build()
                    .expect("failed to start worker threads"),
            )
        });
        Self { workers, pool }
    }

    pub fn sequential() -> Self {
        Self::new(1)
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match &self.pool {
            None => items.iter().map(f).collect(),
            Some(pool) => pool.install(|| items.par_iter().map(f).collect()),
        }
    }
}

impl Default for WorkerPool {
    fn default() -> Self {
        Self::sequential()
    }
}

impl fmt::Debug for WorkerPool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WorkerPool").field("workers", &self.workers).finish()
    }
}
