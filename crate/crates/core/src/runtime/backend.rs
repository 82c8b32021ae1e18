//! Compute backends.
//!
//! `Sequential` runs everything on the calling thread. `Parallel { workers }`
//! runs data-parallel loops on a dedicated rayon pool of `workers` threads
//! (one pool per distinct worker count, created lazily and shared). Without
//! the `parallel` feature every backend executes sequentially.
//!
//! Every helper preserves input order, so results never depend on the
//! backend or worker count as long as the per-item closure is pure.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Backend {
    #[default]
    Sequential,
    Parallel {
        workers: usize,
    },
}

impl Backend {
    pub fn parallel(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::config("backend.workers", "must be >= 1"));
        }
        Ok(Backend::Parallel { workers })
    }

    pub fn workers(&self) -> usize {
        match *self {
            Backend::Sequential => 1,
            Backend::Parallel { workers } => workers,
        }
    }

    pub fn is_sequential(&self) -> bool {
        matches!(self, Backend::Sequential)
    }

    /// Ordered map over a slice.
    pub fn map<T, U, F>(&self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        match self.pool() {
            #[cfg(feature = "parallel")]
            Some(pool) => {
                use rayon::prelude::*;
                pool.install(|| items.par_iter().map(&f).collect())
            }
            _ => items.iter().map(f).collect(),
        }
    }

    /// Ordered map over `0..n`.
    pub fn map_range<U, F>(&self, n: usize, f: F) -> Vec<U>
    where
        U: Send,
        F: Fn(usize) -> U + Sync + Send,
    {
        match self.pool() {
            #[cfg(feature = "parallel")]
            Some(pool) => {
                use rayon::prelude::*;
                pool.install(|| (0..n).into_par_iter().map(&f).collect())
            }
            _ => (0..n).map(f).collect(),
        }
    }

    /// Ordered fallible map. When several items fail, the error of the
    /// earliest item in input order is returned.
    pub fn try_map<T, U, F>(&self, items: &[T], f: F) -> Result<Vec<U>>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> Result<U> + Sync + Send,
    {
        self.map(items, f).into_iter().collect()
    }

    /// Runs `f(chunk_index, chunk)` over consecutive `chunk_len`-sized pieces
    /// of `data`.
    pub fn for_each_chunk_mut<T, F>(&self, data: &mut [T], chunk_len: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        let chunk_len = chunk_len.max(1);
        match self.pool() {
            #[cfg(feature = "parallel")]
            Some(pool) => {
                use rayon::prelude::*;
                pool.install(|| data.par_chunks_mut(chunk_len).enumerate().for_each(|(i, c)| f(i, c)))
            }
            _ => data.chunks_mut(chunk_len).enumerate().for_each(|(i, c)| f(i, c)),
        }
    }

    #[cfg(feature = "parallel")]
    fn pool(&self) -> Option<std::sync::Arc<rayon::ThreadPool>> {
        match *self {
            Backend::Sequential => None,
            Backend::Parallel { workers } => Some(pools::get(workers.max(1))),
        }
    }

    #[cfg(not(feature = "parallel"))]
    fn pool(&self) -> Option<std::convert::Infallible> {
        None
    }
}

#[cfg(feature = "parallel")]
mod pools {
    use std::collections::HashMap;
    use std::sync::{Arc, Mutex, OnceLock};

    use rayon::ThreadPool;

    static POOLS: OnceLock<Mutex<HashMap<usize, Arc<ThreadPool>>>> = OnceLock::new();

    pub(super) fn get(workers: usize) -> Arc<ThreadPool> {
        let mut map = POOLS
            .get_or_init(Default::default)
            .lock()
            .unwrap_or_else(|e| e.into_inner());
        map.entry(workers)
            .or_insert_with(|| {
                Arc::new(
                    rayon::ThreadPoolBuilder::new()
                        .num_threads(workers)
                        .thread_name(move |i| format!("teamflow-{workers}-{i}"))
                        .build()
                        .expect("failed to build worker pool"),
                )
            })
            .clone()
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Backend::Sequential => f.write_str("sequential"),
            Backend::Parallel { workers } => write!(f, "parallel:{workers}"),
        }
    }
}

impl FromStr for Backend {
    type Err = Error;

    /// Accepts `sequential`, `parallel` (all available cores) and `parallel:N`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "sequential" | "seq" => Ok(Backend::Sequential),
            "parallel" => Backend::parallel(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
            _ => {
                let n = s
                    .strip_prefix("parallel:")
                    .ok_or_else(|| Error::config("backend", format!("unknown backend `{s}`")))?;
                let workers = n
                    .parse::<usize>()
                    .map_err(|_| Error::config("backend", format!("bad worker count `{n}`")))?;
                Backend::parallel(workers)
            }
        }
    }
}
