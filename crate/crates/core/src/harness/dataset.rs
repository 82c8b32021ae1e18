//! Seeded synthetic datasets: team scenarios split into train/test, plus a
//! short video clip of moving squares for the vision stages.
//!
//! On-disk layout written by [`generate_dataset`]:
//!
//! ```text
//! <out>/train/<Action>/<NNN>/{trajectories.txt, scenario.label, roles.txt}
//! <out>/test/<Action>/<NNN>/...
//! <out>/clip/frame_NNNNNN.pgm
//! <out>/clip/truth.txt
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::config::FrameworkConfig;
use crate::error::{Error, Result};
use crate::frame_io::pnm::{load_frame_sequence, save_frame_sequence};
use crate::frame_io::scenario::{load_scenario, save_scenario};
use crate::frame_io::{
    synth_frames, synth_team_scenario, Action, AgentTrajectory, Frame, Role, ScenarioSpec, SceneSpec, ShapeMotion,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn dir_name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledScenario {
    pub id: String,
    pub trajectories: Vec<AgentTrajectory>,
    pub action: Option<Action>,
    /// `roles[t][agent]`, indexed from frame 0, when known.
    pub roles: Option<Vec<Vec<Role>>>,
}

/// Scenario `k` of action `a` draws its generator seed from this. Test
/// scenarios continue the index after the training ones.
pub fn scenario_seed(seed: u64, action_index: usize, k: usize) -> u64 {
    seed.wrapping_mul(1 << 20)
        .wrapping_add(1000 * action_index as u64)
        .wrapping_add(k as u64)
}

/// Generates one split in memory, grouped by action in canonical order.
pub fn synth_split(cfg: &FrameworkConfig, split: Split) -> Result<Vec<LabeledScenario>> {
    let d = &cfg.dataset;
    let ks = match split {
        Split::Train => 0..d.train_per_action,
        Split::Test => d.train_per_action..d.train_per_action + d.test_per_action,
    };
    let mut out = Vec::new();
    for (ai, &action) in cfg.actions().iter().enumerate() {
        for k in ks.clone() {
            let spec = ScenarioSpec::new(
                action,
                d.agents,
                d.frames,
                d.noise_sigma,
                scenario_seed(cfg.seed, ai, k),
            );
            let s = synth_team_scenario(&spec)?;
            out.push(LabeledScenario {
                id: format!("{}/{action}/{:03}", split.dir_name(), k),
                trajectories: s.trajectories,
                action: Some(action),
                roles: Some(s.roles),
            });
        }
    }
    Ok(out)
}

/// Squares of two sizes in separate horizontal lanes; the small ones are
/// class 0 and the large ones class 1.
pub fn clip_scene() -> (SceneSpec, Vec<usize>) {
    let sq = |size, start, velocity, level| ShapeMotion {
        size,
        start,
        velocity,
        color: [level; 3],
    };
    let shapes = vec![
        sq(6, (4, 6), (1, 0), 200),
        sq(12, (150, 22), (-1, 0), 160),
        sq(6, (30, 50), (1, 0), 230),
        sq(12, (8, 70), (1, 0), 120),
    ];
    let mut scene = SceneSpec::gray(168, 96, shapes);
    scene.background = [30; 3];
    (scene, vec![0, 1, 0, 1])
}

pub const CLIP_CLASSES: [&str; 2] = ["person", "vehicle"];

#[derive(Debug, Clone, PartialEq)]
pub struct Clip {
    pub frames: Vec<Frame>,
    /// `(center, class)` per shape per frame.
    pub truth: Vec<Vec<((f64, f64), usize)>>,
}

pub fn synth_clip(cfg: &FrameworkConfig) -> Result<Clip> {
    let (scene, classes) = clip_scene();
    let c = synth_frames(&scene, cfg.dataset.clip_frames, cfg.seed)?;
    let truth = c
        .centers
        .iter()
        .map(|row| row.iter().copied().zip(classes.iter().copied()).collect())
        .collect();
    Ok(Clip {
        frames: c.frames,
        truth,
    })
}

fn write_truth(clip: &Clip) -> String {
    let mut out = String::from("# frame shape cx cy class\n");
    for (t, row) in clip.truth.iter().enumerate() {
        for (s, ((x, y), c)) in row.iter().enumerate() {
            out.push_str(&format!("{t} {s} {x} {y} {}\n", CLIP_CLASSES[*c]));
        }
    }
    out
}

/// Per-frame `((cx, cy), class)` of every shape.
type Truth = Vec<Vec<((f64, f64), usize)>>;

fn parse_truth(text: &str, n_frames: usize) -> Result<Truth> {
    let mut truth = vec![Vec::new(); n_frames];
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let bad = || Error::parse(i + 1, "expected `frame shape cx cy class`");
        if f.len() != 5 {
            return Err(bad());
        }
        let t: usize = f[0].parse().map_err(|_| bad())?;
        let x: f64 = f[2].parse().map_err(|_| bad())?;
        let y: f64 = f[3].parse().map_err(|_| bad())?;
        let c = CLIP_CLASSES
            .iter()
            .position(|n| *n == f[4])
            .ok_or_else(|| Error::UnknownLabel(f[4].to_string()))?;
        truth.get_mut(t).ok_or_else(bad)?.push(((x, y), c));
    }
    Ok(truth)
}

pub fn load_clip(dir: &Path) -> Result<Clip> {
    let frames = load_frame_sequence(dir)?;
    let p = dir.join("truth.txt");
    let truth = if p.exists() {
        let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        parse_truth(&text, frames.len())?
    } else {
        vec![Vec::new(); frames.len()]
    };
    Ok(Clip { frames, truth })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSummary {
    pub train: usize,
    pub test: usize,
    pub clip_frames: usize,
}

/// Writes both splits and, when motion is enabled, the clip.
pub fn generate_dataset(cfg: &FrameworkConfig, out: &Path) -> Result<DatasetSummary> {
    let mut summary = DatasetSummary {
        train: 0,
        test: 0,
        clip_frames: 0,
    };
    for split in [Split::Train, Split::Test] {
        for s in synth_split(cfg, split)? {
            let scenario = crate::frame_io::Scenario {
                action: s.action.expect("generated scenarios are labeled"),
                trajectories: s.trajectories,
                roles: s.roles.expect("generated scenarios carry roles"),
            };
            save_scenario(&out.join(&s.id), &scenario)?;
            match split {
                Split::Train => summary.train += 1,
                Split::Test => summary.test += 1,
            }
        }
    }
    if cfg.stages.motion {
        let clip = synth_clip(cfg)?;
        let dir = out.join("clip");
        save_frame_sequence(&dir, &clip.frames)?;
        let p = dir.join("truth.txt");
        fs::write(&p, write_truth(&clip)).map_err(|e| Error::io(&p, e))?;
        summary.clip_frames = clip.frames.len();
    }
    Ok(summary)
}

/// Parses `frame agent_id role` lines into `roles[t][agent]`, with agents
/// in the order of `trajs`.
pub fn parse_roles(text: &str, trajs: &[AgentTrajectory]) -> Result<Vec<Vec<Role>>> {
    let mut by: BTreeMap<(usize, u32), Role> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(Error::parse(i + 1, "expected `frame agent_id role`"));
        }
        let t = f[0].parse().map_err(|_| Error::parse(i + 1, "bad frame"))?;
        let id = f[1].parse().map_err(|_| Error::parse(i + 1, "bad agent id"))?;
        by.insert((t, id), f[2].parse()?);
    }
    let last = by.keys().map(|k| k.0).max().unwrap_or(0);
    (0..=last)
        .map(|t| {
            trajs
                .iter()
                .map(|a| {
                    by.get(&(t, a.agent_id)).copied().ok_or_else(|| {
                        Error::Invalid(format!("roles.txt has no role for agent {} at frame {t}", a.agent_id))
                    })
                })
                .collect()
        })
        .collect()
}

fn collect_dirs(dir: &Path, out: &mut Vec<std::path::PathBuf>) -> Result<()> {
    if dir.join("trajectories.txt").is_file() {
        out.push(dir.to_path_buf());
        return Ok(());
    }
    let mut entries: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    entries.sort();
    for e in entries {
        collect_dirs(&e, out)?;
    }
    Ok(())
}

/// Loads every scenario directory under `dir` (recursively, sorted by
/// path). Ids are paths relative to `dir`.
pub fn load_split(dir: &Path) -> Result<Vec<LabeledScenario>> {
    if !dir.is_dir() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "dataset directory not found"),
        ));
    }
    let mut dirs = Vec::new();
    collect_dirs(dir, &mut dirs)?;
    dirs.into_iter()
        .map(|d| {
            let (trajs, action) = load_scenario(&d)?;
            let rp = d.join("roles.txt");
            let roles = if rp.is_file() {
                let text = fs::read_to_string(&rp).map_err(|e| Error::io(&rp, e))?;
                Some(parse_roles(&text, &trajs)?)
            } else {
                None
            };
            let id = d
                .strip_prefix(dir)
                .unwrap_or(&d)
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join("/");
            Ok(LabeledScenario {
                id: if id.is_empty() { ".".into() } else { id },
                trajectories: trajs,
                action,
                roles,
            })
        })
        .collect()
}
