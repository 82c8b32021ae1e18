//! Execution runtime: compute backends, stage pipelining, task-parallel
//! helpers and the placement cost model.

mod backend;
pub mod cost;
pub mod pipeline;

use std::fmt;

pub use backend::Backend;
pub use cost::{estimate_total_time, optimize_placement, CostModel, Edge, Placement, Task};
pub use pipeline::{run_pipeline, Execution, Pipeline, Stage, StageTiming, DEFAULT_QUEUE_CAPACITY};

use crate::error::{Error, Result};

/// Ordered fallible map over independent items. The earliest failing item
/// (in input order) determines the error.
pub fn parallel_map<T, U, F>(items: &[T], f: F, backend: &Backend) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U> + Sync + Send,
{
    backend.try_map(items, f)
}

/// Baseline time over parallel time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Speedup(pub f64);

impl fmt::Display for Speedup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}", self.0)
    }
}

pub fn speedup_report(t_baseline: f64, t_parallel: f64) -> Result<Speedup> {
    if !(t_baseline > 0.0 && t_parallel > 0.0) || !t_baseline.is_finite() || !t_parallel.is_finite() {
        return Err(Error::Invalid(format!(
            "speedup needs positive times, got {t_baseline} and {t_parallel}"
        )));
    }
    Ok(Speedup(t_baseline / t_parallel))
}
