//! Sequential-reference vs parallel timing of the full workload.

use std::sync::Arc;
use std::time::{Duration, Instant};

use super::config::FrameworkConfig;
use super::dataset::LabeledScenario;
use super::team::{run_team, TeamItem, TeamModels};
use super::vision::{run_vision, VisionItem};
use crate::error::{Error, Result};
use crate::frame_io::Frame;
use crate::runtime::{speedup_report, Backend, Execution, Speedup, StageTiming};
use crate::svm::SvmModel;

/// Scenarios per pipeline item in the team stages.
pub const TEAM_BATCH: usize = 8;

#[derive(Debug, Clone)]
pub struct BenchRun {
    pub backend: Backend,
    pub execution: Execution,
    pub team: Vec<TeamItem>,
    pub vision: Vec<VisionItem>,
    pub team_timing: StageTiming,
    pub vision_timing: StageTiming,
    /// Best wall time over the repetitions.
    pub wall: Duration,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub reference: BenchRun,
    pub parallel: BenchRun,
    pub speedup: Speedup,
    /// Team and vision outputs are equal item for item.
    pub identical: bool,
}

impl BenchReport {
    pub fn text(&self) -> String {
        let mut out = String::new();
        for (title, r) in [("reference", &self.reference), ("parallel", &self.parallel)] {
            out.push_str(&format!(
                "== {title}: backend={} execution={:?} wall_s={:.6}\n",
                r.backend,
                r.execution,
                r.wall.as_secs_f64()
            ));
            if !r.vision_timing.stages.is_empty() {
                out.push_str(&r.vision_timing.table());
            }
            out.push_str(&r.team_timing.table());
        }
        out.push_str(&format!("identical_outputs {}\n", self.identical));
        out.push_str(&format!("speedup {}\n", self.speedup));
        out
    }
}

pub struct Workload {
    pub models: Arc<TeamModels>,
    pub svm: Option<Arc<SvmModel>>,
    pub scenarios: Vec<LabeledScenario>,
    pub frames: Vec<Frame>,
}

fn run_once(cfg: &FrameworkConfig, w: &Workload, backend: Backend, execution: Execution) -> Result<BenchRun> {
    let start = Instant::now();
    let (vision, vision_timing) = if cfg.stages.motion && !w.frames.is_empty() {
        run_vision(cfg, w.svm.clone(), w.frames.clone(), backend, execution)?
    } else {
        (Vec::new(), StageTiming::default())
    };
    let (team, team_timing) = run_team(
        cfg,
        w.models.clone(),
        w.scenarios.clone(),
        backend,
        execution,
        TEAM_BATCH,
    )?;
    Ok(BenchRun {
        backend,
        execution,
        team,
        vision,
        team_timing,
        vision_timing,
        wall: start.elapsed(),
    })
}

fn best_of(
    cfg: &FrameworkConfig,
    w: &Workload,
    backend: Backend,
    execution: Execution,
    reps: usize,
) -> Result<BenchRun> {
    let mut best = run_once(cfg, w, backend, execution)?;
    for _ in 1..reps {
        let r = run_once(cfg, w, backend, execution)?;
        if r.wall < best.wall {
            best = r;
        }
    }
    Ok(best)
}

/// Times the sequential reference (Sequential backend, no pipelining)
/// against `backend` with pipelining, and compares their outputs.
pub fn run_bench(cfg: &FrameworkConfig, w: &Workload, backend: Backend, reps: usize) -> Result<BenchReport> {
    if reps == 0 {
        return Err(Error::config("bench.reps", "must be >= 1"));
    }
    let reference = best_of(cfg, w, Backend::Sequential, Execution::Sequential, reps)?;
    let parallel = best_of(cfg, w, backend, Execution::Pipelined, reps)?;
    let identical = reference.team == parallel.team && reference.vision == parallel.vision;
    let speedup = speedup_report(
        reference.wall.as_secs_f64().max(1e-9),
        parallel.wall.as_secs_f64().max(1e-9),
    )?;
    Ok(BenchReport {
        reference,
        parallel,
        speedup,
        identical,
    })
}
