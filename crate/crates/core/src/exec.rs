//! Data-parallel execution with a sequential fallback.
//!
//! With the `parallel` feature (on by default) the `Parallel` strategy runs on
//! rayon. Without it, both strategies run on the calling thread so results are
//! identical either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How batch work over repositories or commits is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// True when this strategy will actually fan out across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Maps `f` over `items` on the global pool, preserving input order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Like [`Execution::map`], but caps concurrency at `max_threads`. Used for
    /// network and subprocess work where the bound is a politeness limit.
    pub fn map_bounded<T, R, F>(self, items: &[T], max_threads: usize, f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() && max_threads > 1 && items.len() > 1 {
            match rayon::ThreadPoolBuilder::new()
                .num_threads(max_threads)
                .thread_name(|i| format!("forkscope-fetch-{i}"))
                .build()
            {
                Ok(pool) => return pool.install(|| items.par_iter().map(&f).collect()),
                Err(err) => log::warn!("falling back to sequential execution: {err}"),
            }
        }
        let _ = max_threads;
        items.iter().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_agree_and_keep_order() {
        let items: Vec<u64> = (0..1000).collect();
        let seq = Execution::Sequential.map(&items, |x| x * x);
        let par = Execution::Parallel.map(&items, |x| x * x);
        let bounded = Execution::Parallel.map_bounded(&items, 3, |x| x * x);
        assert_eq!(seq, par);
        assert_eq!(seq, bounded);
        assert_eq!(seq[999], 998_001);
    }

    #[test]
    fn default_follows_feature() {
        assert_eq!(
            Execution::default().is_parallel(),
            cfg!(feature = "parallel")
        );
    }
}
