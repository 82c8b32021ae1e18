//! Type-erased stage pipelines over bounded FIFO queues.
//!
//! Stages are assembled from ordinary closures, checked for a consistent
//! input/output type chain, then run either item by item on the calling
//! thread (`Execution::Sequential`) or with one thread per stage connected by
//! `sync_channel`s (`Execution::Pipelined`). Both modes feed every stage the
//! same items in the same order, so stateful stages see identical inputs and
//! outputs match bit for bit.

use std::any::{type_name, Any, TypeId};
use std::fmt;
use std::sync::mpsc::{sync_channel, Receiver, SyncSender};
use std::thread;
use std::time::{Duration, Instant};

use super::Backend;
use crate::error::{Error, Result};

pub const DEFAULT_QUEUE_CAPACITY: usize = 4;

type Item = Box<dyn Any + Send>;
type StageFn = Box<dyn FnMut(Item, &Backend) -> Result<Item> + Send>;

pub struct Stage {
    name: String,
    backend: Backend,
    queue_capacity: usize,
    enabled: bool,
    input: (TypeId, &'static str),
    output: (TypeId, &'static str),
    f: StageFn,
}

impl fmt::Debug for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Stage")
            .field("name", &self.name)
            .field("backend", &self.backend)
            .field("queue_capacity", &self.queue_capacity)
            .field("enabled", &self.enabled)
            .field("input", &self.input.1)
            .field("output", &self.output.1)
            .finish()
    }
}

impl Stage {
    /// A stage that ignores its backend.
    pub fn new<I, O, F>(name: &str, mut f: F) -> Stage
    where
        I: Send + 'static,
        O: Send + 'static,
        F: FnMut(I) -> Result<O> + Send + 'static,
    {
        Stage::with_backend(name, Backend::Sequential, move |x: I, _: &Backend| f(x))
    }

    /// A stage whose closure receives its configured backend.
    pub fn with_backend<I, O, F>(name: &str, backend: Backend, mut f: F) -> Stage
    where
        I: Send + 'static,
        O: Send + 'static,
        F: FnMut(I, &Backend) -> Result<O> + Send + 'static,
    {
        Stage {
            name: name.to_string(),
            backend,
            queue_capacity: DEFAULT_QUEUE_CAPACITY,
            enabled: true,
            input: (TypeId::of::<I>(), type_name::<I>()),
            output: (TypeId::of::<O>(), type_name::<O>()),
            f: Box::new(move |item: Item, b: &Backend| {
                let x = item.downcast::<I>().expect("type chain checked at assembly");
                f(*x, b).map(|o| Box::new(o) as Item)
            }),
        }
    }

    /// Capacity of this stage's input queue.
    pub fn capacity(mut self, capacity: usize) -> Stage {
        self.queue_capacity = capacity;
        self
    }

    pub fn enabled(mut self, enabled: bool) -> Stage {
        self.enabled = enabled;
        self
    }

    pub fn backend(mut self, backend: Backend) -> Stage {
        self.backend = backend;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Sequential,
    Pipelined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageStats {
    pub name: String,
    pub items: usize,
    /// Time spent inside the stage function.
    pub total: Duration,
}

impl StageStats {
    pub fn mean_ms(&self) -> f64 {
        if self.items == 0 {
            0.0
        } else {
            self.total.as_secs_f64() * 1e3 / self.items as f64
        }
    }
}

/// Time a queue edge spent blocked: producer waiting on a full queue plus
/// consumer waiting on an empty one.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeStats {
    pub from: String,
    pub to: String,
    pub wait: Duration,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StageTiming {
    pub stages: Vec<StageStats>,
    pub edges: Vec<EdgeStats>,
    pub wall: Duration,
}

impl StageTiming {
    /// `stage items total_s mean_ms` table.
    pub fn table(&self) -> String {
        let w = self.stages.iter().map(|s| s.name.len()).max().unwrap_or(0).max(5);
        let mut out = format!("{:<w$} {:>8} {:>12} {:>12}\n", "stage", "items", "total_s", "mean_ms");
        for s in &self.stages {
            out.push_str(&format!(
                "{:<w$} {:>8} {:>12.6} {:>12.3}\n",
                s.name,
                s.items,
                s.total.as_secs_f64(),
                s.mean_ms()
            ));
        }
        out
    }
}

pub struct Pipeline {
    stages: Vec<Stage>,
}

impl fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.stages).finish()
    }
}

impl Pipeline {
    /// Validates names and capacities. Disabled stages are dropped here.
    pub fn new(stages: Vec<Stage>) -> Result<Pipeline> {
        for (i, s) in stages.iter().enumerate() {
            if s.name.is_empty() {
                return Err(Error::Assembly(format!("stage {i} has no name")));
            }
            if stages[..i].iter().any(|t| t.name == s.name) {
                return Err(Error::Assembly(format!("duplicate stage name `{}`", s.name)));
            }
            if s.queue_capacity == 0 {
                return Err(Error::Assembly(format!(
                    "stage `{}` queue capacity must be >= 1",
                    s.name
                )));
            }
        }
        Ok(Pipeline {
            stages: stages.into_iter().filter(|s| s.enabled).collect(),
        })
    }

    pub fn stage_names(&self) -> Vec<&str> {
        self.stages.iter().map(|s| s.name.as_str()).collect()
    }

    /// Checks that `I` flows through every enabled stage and comes out as `O`.
    pub fn check<I: 'static, O: 'static>(&self) -> Result<()> {
        let mut cur = (TypeId::of::<I>(), type_name::<I>());
        let mut from = "source".to_string();
        for s in &self.stages {
            if s.input.0 != cur.0 {
                return Err(Error::Assembly(format!(
                    "stage `{}` takes {} but `{from}` produces {}",
                    s.name, s.input.1, cur.1
                )));
            }
            cur = s.output;
            from = s.name.clone();
        }
        if cur.0 != TypeId::of::<O>() {
            return Err(Error::Assembly(format!(
                "sink expects {} but `{from}` produces {}",
                type_name::<O>(),
                cur.1
            )));
        }
        Ok(())
    }

    /// Runs the pipeline and collects the sink stream.
    pub fn run<I, O, S>(self, source: S, mode: Execution) -> Result<(Vec<O>, StageTiming)>
    where
        I: Send + 'static,
        O: Send + 'static,
        S: IntoIterator<Item = I>,
        S::IntoIter: Send,
    {
        let mut out = Vec::new();
        let timing = self.run_into(source, mode, |o| {
            out.push(o);
            Ok(())
        })?;
        Ok((out, timing))
    }

    /// Runs the pipeline, handing each output to `sink` in input order.
    pub fn run_into<I, O, S, K>(self, source: S, mode: Execution, sink: K) -> Result<StageTiming>
    where
        I: Send + 'static,
        O: Send + 'static,
        S: IntoIterator<Item = I>,
        S::IntoIter: Send,
        K: FnMut(O) -> Result<()>,
    {
        self.check::<I, O>()?;
        let start = Instant::now();
        let mut timing = match mode {
            Execution::Sequential => self.run_sequential(source, sink)?,
            Execution::Pipelined => self.run_pipelined(source, sink)?,
        };
        timing.wall = start.elapsed();
        Ok(timing)
    }

    fn run_sequential<I, O, S, K>(mut self, source: S, mut sink: K) -> Result<StageTiming>
    where
        I: Send + 'static,
        O: Send + 'static,
        S: IntoIterator<Item = I>,
        K: FnMut(O) -> Result<()>,
    {
        let mut stats: Vec<StageStats> = self.stages.iter().map(|s| stats_for(&s.name)).collect();
        for x in source {
            let mut item: Item = Box::new(x);
            for (s, st) in self.stages.iter_mut().zip(&mut stats) {
                let t0 = Instant::now();
                item = (s.f)(item, &s.backend).map_err(|e| wrap(&s.name, e))?;
                st.total += t0.elapsed();
                st.items += 1;
            }
            sink(*item.downcast::<O>().expect("type chain checked"))?;
        }
        Ok(StageTiming {
            stages: stats,
            edges: Vec::new(),
            wall: Duration::ZERO,
        })
    }

    fn run_pipelined<I, O, S, K>(self, source: S, mut sink: K) -> Result<StageTiming>
    where
        I: Send + 'static,
        O: Send + 'static,
        S: IntoIterator<Item = I>,
        S::IntoIter: Send,
        K: FnMut(O) -> Result<()>,
    {
        let names: Vec<String> = self.stages.iter().map(|s| s.name.clone()).collect();
        let source = source.into_iter();
        let first_cap = self.stages.first().map_or(DEFAULT_QUEUE_CAPACITY, |s| s.queue_capacity);
        let (src_tx, mut rx) = sync_channel::<(usize, Item)>(first_cap);

        thread::scope(|scope| {
            let feeder = scope.spawn(move || {
                let mut blocked = Duration::ZERO;
                for (k, x) in source.enumerate() {
                    let t0 = Instant::now();
                    if src_tx.send((k, Box::new(x) as Item)).is_err() {
                        break;
                    }
                    blocked += t0.elapsed();
                }
                blocked
            });

            let mut workers = Vec::with_capacity(self.stages.len());
            let n = self.stages.len();
            let caps: Vec<usize> = self.stages.iter().map(|s| s.queue_capacity).collect();
            for (i, stage) in self.stages.into_iter().enumerate() {
                let cap = caps.get(i + 1).copied().unwrap_or(DEFAULT_QUEUE_CAPACITY);
                let (tx, next_rx) = sync_channel::<(usize, Item)>(cap);
                let input = std::mem::replace(&mut rx, next_rx);
                workers.push(scope.spawn(move || stage_loop(stage, input, tx)));
            }

            let mut sink_wait = Duration::ZERO;
            let mut sink_err: Option<(usize, Error)> = None;
            loop {
                let t0 = Instant::now();
                let Ok((k, item)) = rx.recv() else { break };
                sink_wait += t0.elapsed();
                if let Err(e) = sink(*item.downcast::<O>().expect("type chain checked")) {
                    sink_err = Some((k, e));
                    break;
                }
            }
            drop(rx);

            let feed_wait = feeder.join().expect("feeder thread panicked");
            let mut stats = Vec::with_capacity(n);
            let mut waits = Vec::with_capacity(n);
            let mut first_err: Option<(usize, Error)> = None;
            for w in workers {
                let r = w.join().expect("stage thread panicked");
                if let Some((k, e)) = r.error {
                    if first_err.as_ref().is_none_or(|(fk, _)| k < *fk) {
                        first_err = Some((k, e));
                    }
                }
                stats.push(r.stats);
                waits.push((r.recv_wait, r.send_wait));
            }
            if let Some((k, e)) = sink_err {
                if first_err.as_ref().is_none_or(|(fk, _)| k < *fk) {
                    first_err = Some((k, e));
                }
            }
            if let Some((_, e)) = first_err {
                return Err(e);
            }

            // edge i feeds stage i; the last edge feeds the sink
            let mut edges = Vec::with_capacity(n + 1);
            for i in 0..=n {
                let producer_wait = if i == 0 { feed_wait } else { waits[i - 1].1 };
                let consumer_wait = if i == n { sink_wait } else { waits[i].0 };
                edges.push(EdgeStats {
                    from: if i == 0 { "source".into() } else { names[i - 1].clone() },
                    to: if i == n { "sink".into() } else { names[i].clone() },
                    wait: producer_wait + consumer_wait,
                });
            }
            Ok(StageTiming {
                stages: stats,
                edges,
                wall: Duration::ZERO,
            })
        })
    }
}

struct LoopResult {
    stats: StageStats,
    recv_wait: Duration,
    send_wait: Duration,
    error: Option<(usize, Error)>,
}

fn stage_loop(mut stage: Stage, input: Receiver<(usize, Item)>, output: SyncSender<(usize, Item)>) -> LoopResult {
    let mut r = LoopResult {
        stats: stats_for(&stage.name),
        recv_wait: Duration::ZERO,
        send_wait: Duration::ZERO,
        error: None,
    };
    loop {
        let t0 = Instant::now();
        let Ok((k, item)) = input.recv() else { break };
        r.recv_wait += t0.elapsed();
        let t1 = Instant::now();
        match (stage.f)(item, &stage.backend) {
            Ok(out) => {
                r.stats.total += t1.elapsed();
                r.stats.items += 1;
                let t2 = Instant::now();
                if output.send((k, out)).is_err() {
                    break;
                }
                r.send_wait += t2.elapsed();
            }
            Err(e) => {
                r.error = Some((k, wrap(&stage.name, e)));
                break;
            }
        }
    }
    // dropping `input` and `output` here closes both neighbouring queues
    r
}

fn stats_for(name: &str) -> StageStats {
    StageStats {
        name: name.to_string(),
        items: 0,
        total: Duration::ZERO,
    }
}

fn wrap(stage: &str, e: Error) -> Error {
    Error::Stage {
        stage: stage.to_string(),
        source: Box::new(e),
    }
}

/// Convenience wrapper: assemble, then run.
pub fn run_pipeline<I, O, S>(stages: Vec<Stage>, source: S, mode: Execution) -> Result<(Vec<O>, StageTiming)>
where
    I: Send + 'static,
    O: Send + 'static,
    S: IntoIterator<Item = I>,
    S::IntoIter: Send,
{
    Pipeline::new(stages)?.run(source, mode)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arith() -> Vec<Stage> {
        vec![
            Stage::new("inc", |x: i64| Ok(x + 1)),
            Stage::new("dbl", |x: i64| Ok(x * 2)),
            Stage::new("sub", |x: i64| Ok(x - 3)),
        ]
    }

    #[test]
    fn arithmetic_both_modes() {
        let want: Vec<i64> = (1..=10).map(|x| (x + 1) * 2 - 3).collect();
        for mode in [Execution::Sequential, Execution::Pipelined] {
            let (out, t) = run_pipeline::<i64, i64, _>(arith(), 1..=10, mode).unwrap();
            assert_eq!(out, want);
            assert!(t.stages.iter().all(|s| s.items == 10));
        }
    }

    #[test]
    fn single_stage_and_empty() {
        let (out, _) = run_pipeline::<u8, u16, _>(
            vec![Stage::new("w", |x: u8| Ok(x as u16 * 3))],
            vec![1u8, 2],
            Execution::Pipelined,
        )
        .unwrap();
        assert_eq!(out, vec![3, 6]);
        let (out, _) = run_pipeline::<i64, i64, _>(arith(), Vec::new(), Execution::Pipelined).unwrap();
        assert!(out.is_empty());
        let (out, _) = run_pipeline::<i64, i64, _>(Vec::new(), vec![4, 5], Execution::Pipelined).unwrap();
        assert_eq!(out, vec![4, 5]);
    }

    #[test]
    fn type_mismatch_is_assembly_error() {
        let stages = vec![Stage::new("a", |x: i64| Ok(x)), Stage::new("b", |x: String| Ok(x))];
        let err = run_pipeline::<i64, String, _>(stages, vec![1], Execution::Sequential).unwrap_err();
        assert!(matches!(err, Error::Assembly(_)), "{err}");
        let err = run_pipeline::<i64, u8, _>(arith(), vec![1], Execution::Sequential).unwrap_err();
        assert!(matches!(err, Error::Assembly(_)));
    }

    #[test]
    fn disabled_stage_is_skipped() {
        let stages = vec![
            Stage::new("inc", |x: i64| Ok(x + 1)),
            Stage::new("str", |x: i64| Ok(x.to_string())).enabled(false),
            Stage::new("dbl", |x: i64| Ok(x * 2)),
        ];
        let p = Pipeline::new(stages).unwrap();
        assert_eq!(p.stage_names(), vec!["inc", "dbl"]);
        assert_eq!(p.run::<i64, i64, _>(vec![1], Execution::Pipelined).unwrap().0, vec![4]);
    }

    #[test]
    fn assembly_rejects_duplicates_and_zero_capacity() {
        let dup = vec![Stage::new("a", |x: i64| Ok(x)), Stage::new("a", |x: i64| Ok(x))];
        assert!(Pipeline::new(dup).is_err());
        assert!(Pipeline::new(vec![Stage::new("a", |x: i64| Ok(x)).capacity(0)]).is_err());
    }

    #[test]
    fn failure_names_stage_and_matches_sequential() {
        let make = || {
            vec![
                Stage::new("ok", |x: i64| Ok(x)),
                Stage::new("boom", |x: i64| {
                    if x == 7 {
                        Err(Error::Invalid("seven".into()))
                    } else {
                        Ok(x)
                    }
                }),
                Stage::new("late", |x: i64| {
                    if x == 5 {
                        Err(Error::Invalid("five".into()))
                    } else {
                        Ok(x)
                    }
                }),
            ]
        };
        for mode in [Execution::Sequential, Execution::Pipelined] {
            let err = run_pipeline::<i64, i64, _>(make(), 0..100, mode).unwrap_err();
            match err {
                Error::Stage { stage, source } => {
                    assert_eq!(stage, "late");
                    assert_eq!(source.to_string(), "five");
                }
                e => panic!("{e}"),
            }
        }
    }

    #[test]
    fn capacity_one_many_items_no_deadlock() {
        let stages: Vec<Stage> = arith().into_iter().map(|s| s.capacity(1)).collect();
        let (out, t) = run_pipeline::<i64, i64, _>(stages, 0..10_000, Execution::Pipelined).unwrap();
        assert_eq!(out.len(), 10_000);
        assert_eq!(out[9_999], (10_000 * 2) - 3);
        assert_eq!(t.edges.len(), 4);
        assert!(t.table().starts_with("stage"));
    }

    #[test]
    fn stateful_stage_sees_same_order() {
        let make = || {
            let mut acc = 0i64;
            vec![Stage::new("prefix", move |x: i64| {
                acc += x;
                Ok(acc)
            })]
        };
        let a = run_pipeline::<i64, i64, _>(make(), 0..50, Execution::Sequential)
            .unwrap()
            .0;
        let b = run_pipeline::<i64, i64, _>(make(), 0..50, Execution::Pipelined)
            .unwrap()
            .0;
        assert_eq!(a, b);
    }

    #[test]
    fn backend_reaches_stage() {
        let b = Backend::parallel(3).unwrap();
        let s = Stage::with_backend("w", b, |x: usize, be: &Backend| Ok(x * be.workers()));
        assert_eq!(
            run_pipeline::<usize, usize, _>(vec![s], vec![2], Execution::Pipelined)
                .unwrap()
                .0,
            vec![6]
        );
    }
}
