//! Execution strategy for residual sweeps.
//!
//! With the `parallel` feature the work is spread over a rayon pool whose
//! size can be capped through the `INTEGRAX_THREADS` environment variable.
//! Without the feature every strategy runs on the calling thread.

/// Environment variable that caps the number of worker threads.
pub const THREADS_ENV: &str = "INTEGRAX_THREADS";

/// How independent work items are evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// Thread cap parsed from `INTEGRAX_THREADS`; `None` when unset, empty or not
/// a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0)
}

#[cfg(feature = "parallel")]
fn pool() -> &'static rayon::ThreadPool {
    use std::sync::OnceLock;
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut builder = rayon::ThreadPoolBuilder::new().thread_name(|i| format!("integrax-{i}"));
        if let Some(n) = thread_cap() {
            builder = builder.num_threads(n);
        }
        builder.build().expect("failed to start the worker pool")
    })
}

impl Execution {
    /// Whether this build can actually run work in parallel.
    pub fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }

    /// Number of workers used by [`Execution::Parallel`].
    pub fn workers(self) -> usize {
        match self {
            Execution::Sequential => 1,
            #[cfg(feature = "parallel")]
            Execution::Parallel => pool().current_num_threads(),
            #[cfg(not(feature = "parallel"))]
            Execution::Parallel => 1,
        }
    }

    /// Evaluates `f` on every item; the output order matches the input order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Execution::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                pool().install(|| items.par_iter().map(f).collect())
            }
            #[cfg(not(feature = "parallel"))]
            Execution::Parallel => items.iter().map(f).collect(),
        }
    }

    /// Like [`Execution::map`] over `0..n`.
    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        let idx: Vec<usize> = (0..n).collect();
        self.map(&idx, |&i| f(i))
    }
}
