//! Trajectory-level stages: discretization, role assignment and action
//! recognition, plus training and persistence of their models.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use super::config::FrameworkConfig;
use super::dataset::LabeledScenario;
use crate::discretize::{load_spec, observe, role_spec, save_spec, team_spec, DiscretizerSpec, ObservationSequence};
use crate::error::{Error, Result};
use crate::frame_io::Role;
use crate::hmm::{load_bank, recognize, save_bank, train_bank, ActionBank, Recognition, Training};
use crate::roles::{agent_symbols, assign_roles, id3_train_on, load_forest, save_forest, Forest};
use crate::runtime::{parallel_map, Backend, Execution, Pipeline, Stage, StageTiming};

#[derive(Debug, Clone, PartialEq)]
pub struct TeamModels {
    pub team_spec: DiscretizerSpec,
    pub role_spec: DiscretizerSpec,
    pub roles: Option<Forest>,
    pub bank: Option<ActionBank>,
}

/// Per-model training summary, one line each.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    pub lines: Vec<String>,
}

impl TrainLog {
    pub fn text(&self) -> String {
        let mut s = String::new();
        for l in &self.lines {
            let _ = writeln!(s, "{l}");
        }
        s
    }
}

/// Role training examples: discrete agent vectors and ground-truth labels.
pub fn role_examples(data: &[LabeledScenario], spec: &DiscretizerSpec) -> Result<(Vec<Vec<usize>>, Vec<usize>)> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for s in data {
        let Some(roles) = &s.roles else { continue };
        let (first, frames) = agent_symbols(&s.trajectories, spec)?;
        for (i, agents) in frames.into_iter().enumerate() {
            let truth = roles
                .get(first + i)
                .ok_or_else(|| Error::TrainingData(format!("{}: no roles for frame {}", s.id, first + i)))?;
            for (k, v) in agents.into_iter().enumerate() {
                x.push(v);
                y.push(truth[k].index());
            }
        }
    }
    Ok((x, y))
}

pub fn train_team(
    cfg: &FrameworkConfig,
    data: &[LabeledScenario],
    backend: &Backend,
) -> Result<(TeamModels, TrainLog)> {
    let mut log = TrainLog::default();
    let tspec = team_spec();
    let rspec = role_spec();
    let roles = if cfg.stages.roles {
        let (x, y) = role_examples(data, &rspec)?;
        let mut id3 = cfg.id3.clone();
        id3.seed = cfg.seed;
        let forest = id3_train_on(&x, &y, &rspec.radices(), &id3, backend)?;
        let correct = x
            .iter()
            .zip(&y)
            .filter(|(xi, &yi)| matches!(crate::roles::classify(&forest, xi), Ok(c) if c.label == yi))
            .count();
        log.lines.push(format!(
            "roles mode={} trees={} examples={} train_accuracy={:.4}",
            forest.mode,
            forest.trees.len(),
            x.len(),
            correct as f64 / x.len().max(1) as f64
        ));
        Some(forest)
    } else {
        None
    };
    let bank = if cfg.stages.hmm {
        let mut per_action: Vec<(String, Vec<ObservationSequence>)> = cfg
            .actions()
            .iter()
            .map(|a| (a.name().to_string(), Vec::new()))
            .collect();
        for s in data {
            let Some(a) = s.action else { continue };
            if let Some(slot) = per_action.iter_mut().find(|(n, _)| n == a.name()) {
                slot.1.push(observe(&s.trajectories, &tspec, &s.id)?);
            }
        }
        if let Some((n, _)) = per_action.iter().find(|(_, v)| v.is_empty()) {
            return Err(Error::TrainingData(format!("no training scenarios for action `{n}`")));
        }
        let mut hcfg = cfg.hmm.clone();
        hcfg.m_symbols = tspec.alphabet_size();
        hcfg.seed = cfg.seed;
        let (bank, runs): (ActionBank, Vec<Training>) = train_bank(&per_action, &hcfg, backend)?;
        for (m, r) in bank.models().iter().zip(&runs) {
            log.lines.push(format!(
                "hmm action={} sequences={} iterations={} converged={} log_likelihood={:.6}",
                m.action(),
                per_action
                    .iter()
                    .find(|(n, _)| n == m.action())
                    .map_or(0, |p| p.1.len()),
                r.iterations,
                r.converged,
                r.trace.last().copied().unwrap_or(f64::NAN)
            ));
        }
        Some(bank)
    } else {
        None
    };
    Ok((
        TeamModels {
            team_spec: tspec,
            role_spec: rspec,
            roles,
            bank,
        },
        log,
    ))
}

pub fn save_team_models(dir: &Path, m: &TeamModels) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_spec(&dir.join("team.disc"), &m.team_spec)?;
    save_spec(&dir.join("roles.disc"), &m.role_spec)?;
    if let Some(f) = &m.roles {
        save_forest(&dir.join("roles.id3"), f)?;
    }
    if let Some(b) = &m.bank {
        save_bank(&dir.join("hmm"), b)?;
    }
    Ok(())
}

/// Loads what `cfg` needs; a missing model file is an error naming it.
pub fn load_team_models(dir: &Path, cfg: &FrameworkConfig) -> Result<TeamModels> {
    let team_spec = load_spec(&dir.join("team.disc"))?;
    let role_spec = load_spec(&dir.join("roles.disc"))?;
    let roles = if cfg.stages.roles {
        Some(load_forest(&dir.join("roles.id3"))?)
    } else {
        None
    };
    let bank = if cfg.stages.hmm {
        let b = load_bank(&dir.join("hmm"))?;
        if b.is_empty() {
            return Err(Error::io(
                dir.join("hmm"),
                std::io::Error::new(std::io::ErrorKind::NotFound, "no .hmm models found"),
            ));
        }
        Some(b)
    } else {
        None
    };
    Ok(TeamModels {
        team_spec,
        role_spec,
        roles,
        bank,
    })
}

/// Carrier flowing through the team stages.
#[derive(Debug, Clone, PartialEq)]
pub struct TeamItem {
    pub scenario: LabeledScenario,
    pub obs: Option<ObservationSequence>,
    /// First frame of `agent_frames` and `roles`.
    pub first_frame: usize,
    pub agent_frames: Option<Vec<Vec<Vec<usize>>>>,
    pub roles: Option<Vec<Vec<usize>>>,
    pub recognition: Option<Recognition>,
}

impl TeamItem {
    pub fn new(scenario: LabeledScenario) -> Self {
        TeamItem {
            scenario,
            obs: None,
            first_frame: 0,
            agent_frames: None,
            roles: None,
            recognition: None,
        }
    }

    /// `frame agent_id role` lines.
    pub fn roles_text(&self) -> Option<String> {
        let roles = self.roles.as_ref()?;
        let mut out = String::from("# frame agent_id role\n");
        for (i, frame) in roles.iter().enumerate() {
            for (k, &r) in frame.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{} {} {}",
                    self.first_frame + i,
                    self.scenario.trajectories[k].agent_id,
                    Role::ALL[r].name()
                );
            }
        }
        Some(out)
    }
}

pub type TeamBatch = Vec<TeamItem>;

/// Builds the enabled team stages. Each stage maps over a batch of
/// scenarios with its backend.
pub fn team_stages(cfg: &FrameworkConfig, models: Arc<TeamModels>, backend: Backend) -> Vec<Stage> {
    let cap = cfg.queue_capacity;
    let m = models.clone();
    let disc = Stage::with_backend("discretization", backend, move |batch: TeamBatch, b: &Backend| {
        parallel_map(
            &batch,
            |it| {
                let mut it = it.clone();
                it.obs = Some(observe(&it.scenario.trajectories, &m.team_spec, &it.scenario.id)?);
                let (first, frames) = agent_symbols(&it.scenario.trajectories, &m.role_spec)?;
                it.first_frame = first;
                it.agent_frames = Some(frames);
                Ok(it)
            },
            b,
        )
    })
    .capacity(cap)
    .enabled(cfg.stages.discretization);

    let m = models.clone();
    let window = cfg.role_window;
    let roles = Stage::with_backend("roles", backend, move |batch: TeamBatch, b: &Backend| {
        let forest = m
            .roles
            .as_ref()
            .ok_or_else(|| Error::InvalidModel("no role model loaded".into()))?;
        parallel_map(
            &batch,
            |it| {
                let mut it = it.clone();
                let frames = it
                    .agent_frames
                    .as_ref()
                    .ok_or_else(|| Error::Invalid("roles stage needs discretized agents".into()))?;
                it.roles = Some(assign_roles(frames, forest, window)?);
                Ok(it)
            },
            b,
        )
    })
    .capacity(cap)
    .enabled(cfg.stages.roles);

    let m = models;
    let hmm = Stage::with_backend("hmm", backend, move |batch: TeamBatch, b: &Backend| {
        let bank = m
            .bank
            .as_ref()
            .ok_or_else(|| Error::InvalidModel("no action models loaded".into()))?;
        parallel_map(
            &batch,
            |it| {
                let mut it = it.clone();
                let obs = it
                    .obs
                    .as_ref()
                    .ok_or_else(|| Error::Invalid("hmm stage needs an observation sequence".into()))?;
                // models are scored sequentially here; the batch is the parallel axis
                it.recognition = Some(recognize(bank, obs, &Backend::Sequential)?);
                Ok(it)
            },
            b,
        )
    })
    .capacity(cap)
    .enabled(cfg.stages.hmm);

    vec![disc, roles, hmm]
}

/// Runs the team stages over `scenarios` in batches of `batch` items.
pub fn run_team(
    cfg: &FrameworkConfig,
    models: Arc<TeamModels>,
    scenarios: Vec<LabeledScenario>,
    backend: Backend,
    execution: Execution,
    batch: usize,
) -> Result<(Vec<TeamItem>, StageTiming)> {
    let batch = batch.max(1);
    let mut batches: Vec<TeamBatch> = Vec::new();
    let mut cur = Vec::with_capacity(batch);
    for s in scenarios {
        cur.push(TeamItem::new(s));
        if cur.len() == batch {
            batches.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        batches.push(cur);
    }
    let pipeline = Pipeline::new(team_stages(cfg, models, backend))?;
    let (out, timing) = pipeline.run::<TeamBatch, TeamBatch, _>(batches, execution)?;
    Ok((out.into_iter().flatten().collect(), timing))
}

/// Fraction of agent-frames whose assigned role matches ground truth.
pub fn role_accuracy(items: &[TeamItem]) -> Option<f64> {
    let mut hit = 0usize;
    let mut n = 0usize;
    for it in items {
        let (Some(pred), Some(truth)) = (&it.roles, &it.scenario.roles) else {
            continue;
        };
        for (i, frame) in pred.iter().enumerate() {
            let Some(tr) = truth.get(it.first_frame + i) else {
                continue;
            };
            for (k, &r) in frame.iter().enumerate() {
                n += 1;
                hit += usize::from(tr[k].index() == r);
            }
        }
    }
    (n > 0).then(|| hit as f64 / n as f64)
}
