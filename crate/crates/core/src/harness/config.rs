//! Flat `section.key = value` configuration. Unknown keys are errors; any
//! key left out keeps its default.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::discretize::{team_spec, TEAM_SCHEMA};
use crate::error::{Error, Result};
use crate::frame_io::{Action, NOISE_MODERATE};
use crate::hmm::HmmConfig;
use crate::motion::{Method, MotionConfig};
use crate::roles::{Id3Config, Id3Mode};
use crate::runtime::{Backend, Execution, DEFAULT_QUEUE_CAPACITY};
use crate::segmentation::{Connectivity, SegmentationConfig};
use crate::svm::{Kernel, SvmConfig};
use crate::tracking::TrackerConfig;

/// Stage names in pipeline order.
pub const STAGES: [&str; 7] = [
    "motion",
    "segmentation",
    "classification",
    "tracking",
    "discretization",
    "roles",
    "hmm",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageToggles {
    pub motion: bool,
    pub segmentation: bool,
    pub classification: bool,
    pub tracking: bool,
    pub discretization: bool,
    pub roles: bool,
    pub hmm: bool,
}

impl StageToggles {
    pub fn get(&self, name: &str) -> bool {
        match name {
            "motion" => self.motion,
            "segmentation" => self.segmentation,
            "classification" => self.classification,
            "tracking" => self.tracking,
            "discretization" => self.discretization,
            "roles" => self.roles,
            "hmm" => self.hmm,
            _ => false,
        }
    }

    pub fn any_vision(&self) -> bool {
        self.motion
    }
}

/// Synthetic dataset shape used by `generate`, `eval` and `bench`.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub agents: usize,
    pub frames: usize,
    pub train_per_action: usize,
    pub test_per_action: usize,
    pub noise_sigma: f64,
    /// Frames in the synthetic video clip (background window included).
    pub clip_frames: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameworkConfig {
    pub stages: StageToggles,
    pub motion: MotionConfig,
    pub segmentation: SegmentationConfig,
    pub svm: SvmConfig,
    pub tracker: TrackerConfig,
    pub id3: Id3Config,
    pub role_window: usize,
    pub hmm: HmmConfig,
    pub hmm_feature_len: usize,
    pub n_actions: usize,
    pub dataset: DatasetConfig,
    pub backend: Backend,
    pub execution: Execution,
    pub queue_capacity: usize,
    pub seed: u64,
    pub data_dir: Option<PathBuf>,
    pub model_dir: Option<PathBuf>,
}

impl Default for FrameworkConfig {
    fn default() -> Self {
        FrameworkConfig {
            stages: StageToggles {
                motion: true,
                segmentation: true,
                classification: true,
                tracking: true,
                discretization: true,
                roles: true,
                hmm: true,
            },
            motion: MotionConfig::default(),
            segmentation: SegmentationConfig::default(),
            svm: SvmConfig::new(3, 2),
            tracker: TrackerConfig::default(),
            id3: Id3Config::tree(4),
            role_window: 5,
            hmm: HmmConfig::new(team_spec().alphabet_size()),
            hmm_feature_len: TEAM_SCHEMA.len(),
            n_actions: Action::ALL.len(),
            dataset: DatasetConfig {
                agents: 6,
                frames: 60,
                train_per_action: 30,
                test_per_action: 15,
                noise_sigma: NOISE_MODERATE,
                clip_frames: 121,
            },
            backend: Backend::Sequential,
            execution: Execution::Sequential,
            queue_capacity: DEFAULT_QUEUE_CAPACITY,
            seed: 42,
            data_dir: None,
            model_dir: None,
        }
    }
}

fn val<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::config(key, format!("cannot parse `{v}`")))
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "on" | "yes" => Ok(true),
        "false" | "off" | "no" => Ok(false),
        _ => Err(Error::config(key, format!("expected true or false, got `{v}`"))),
    }
}

impl FrameworkConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let v = v.trim();
        match key {
            "stages.motion" => self.stages.motion = flag(key, v)?,
            "stages.segmentation" => self.stages.segmentation = flag(key, v)?,
            "stages.classification" => self.stages.classification = flag(key, v)?,
            "stages.tracking" => self.stages.tracking = flag(key, v)?,
            "stages.discretization" => self.stages.discretization = flag(key, v)?,
            "stages.roles" => self.stages.roles = flag(key, v)?,
            "stages.hmm" => self.stages.hmm = flag(key, v)?,

            "motion.window_w" => self.motion.window_w = val(key, v)?,
            "motion.histogram_bins" => self.motion.histogram_bins = val(key, v)?,
            "motion.method" => {
                self.motion.method = match v {
                    "mean" => Method::Mean,
                    "mode" => Method::Mode,
                    _ => return Err(Error::config(key, "expected mean or mode")),
                }
            }
            "motion.fg_threshold" => self.motion.fg_threshold = val(key, v)?,

            "segmentation.n_blocks" => self.segmentation.n_blocks = val(key, v)?,
            "segmentation.connectivity" => {
                self.segmentation.connectivity = match v {
                    "4" => Connectivity::Four,
                    "8" => Connectivity::Eight,
                    _ => return Err(Error::config(key, "expected 4 or 8")),
                }
            }
            "segmentation.min_area" => self.segmentation.min_area = val(key, v)?,

            "svm.feature_len" => self.svm.feature_len = val(key, v)?,
            "svm.n_classes" => self.svm.n_classes = val(key, v)?,
            "svm.c" => self.svm.c = val(key, v)?,
            "svm.tol" => self.svm.tol = val(key, v)?,
            "svm.max_passes" => self.svm.max_passes = val(key, v)?,
            "svm.kernel" => {
                self.svm.kernel = match v {
                    "linear" => Kernel::Linear,
                    _ => match v.strip_prefix("rbf:") {
                        Some(g) => Kernel::Rbf { gamma: val(key, g)? },
                        None => return Err(Error::config(key, "expected linear or rbf:GAMMA")),
                    },
                }
            }

            "tracker.k_clusters" => self.tracker.k_clusters = val(key, v)?,
            "tracker.max_iters" => self.tracker.max_iters = val(key, v)?,
            "tracker.eps" => self.tracker.eps = val(key, v)?,
            "tracker.kmeans_iters" => self.tracker.kmeans_iters = val(key, v)?,

            "id3.mode" => self.id3.mode = v.parse::<Id3Mode>()?,
            "id3.n_trees" => self.id3.n_trees = val(key, v)?,
            "id3.n_classes" => self.id3.n_classes = val(key, v)?,
            "id3.max_depth" => self.id3.max_depth = val(key, v)?,
            "id3.min_samples" => self.id3.min_samples = val(key, v)?,
            "id3.feature_bagging_fraction" => self.id3.feature_bagging_fraction = val(key, v)?,
            "id3.window" => self.role_window = val(key, v)?,

            "hmm.n_states" => self.hmm.n_states = val(key, v)?,
            "hmm.feature_len" => self.hmm_feature_len = val(key, v)?,
            "hmm.block_size" => self.hmm.block_size = val(key, v)?,
            "hmm.n_actions" => self.n_actions = val(key, v)?,
            "hmm.max_iters" => self.hmm.max_iters = val(key, v)?,
            "hmm.ll_tol" => self.hmm.ll_tol = val(key, v)?,
            "hmm.floor" => self.hmm.floor = val(key, v)?,

            "dataset.agents" => self.dataset.agents = val(key, v)?,
            "dataset.frames" => self.dataset.frames = val(key, v)?,
            "dataset.train_per_action" => self.dataset.train_per_action = val(key, v)?,
            "dataset.test_per_action" => self.dataset.test_per_action = val(key, v)?,
            "dataset.noise_sigma" => {
                self.dataset.noise_sigma = if v == "moderate" { NOISE_MODERATE } else { val(key, v)? }
            }
            "dataset.clip_frames" => self.dataset.clip_frames = val(key, v)?,

            "backend.kind" => self.backend = v.parse()?,
            "backend.pipelined" => {
                self.execution = if flag(key, v)? {
                    Execution::Pipelined
                } else {
                    Execution::Sequential
                }
            }
            "backend.queue_capacity" => self.queue_capacity = val(key, v)?,

            "run.seed" => self.seed = val(key, v)?,
            "paths.data" => self.data_dir = Some(PathBuf::from(v)),
            "paths.models" => self.model_dir = Some(PathBuf::from(v)),
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    /// Checks every enabled stage's parameters and the stage dependencies.
    /// Disabled stages are not checked.
    pub fn validate(&self) -> Result<()> {
        let s = &self.stages;
        let needs = [
            ("segmentation", "motion"),
            ("classification", "segmentation"),
            ("tracking", "segmentation"),
            ("roles", "discretization"),
            ("hmm", "discretization"),
        ];
        for (stage, dep) in needs {
            if s.get(stage) && !s.get(dep) {
                return Err(Error::config(
                    format!("stages.{stage}"),
                    format!("requires stages.{dep}"),
                ));
            }
        }
        if s.motion {
            self.motion.validate()?;
            if self.dataset.clip_frames < self.motion.window_w {
                return Err(Error::config("dataset.clip_frames", "must be >= motion.window_w"));
            }
        }
        if s.segmentation {
            self.segmentation.validate()?;
        }
        if s.classification {
            self.svm.validate()?;
            if self.svm.feature_len != 3 {
                return Err(Error::config("svm.feature_len", "blob features have length 3"));
            }
        }
        if s.tracking {
            self.tracker.validate()?;
        }
        if s.roles {
            self.id3.validate()?;
            if self.id3.n_classes != 4 {
                return Err(Error::config("id3.n_classes", "the scenario generator defines 4 roles"));
            }
            if self.role_window == 0 {
                return Err(Error::config("id3.window", "must be >= 1"));
            }
        }
        if s.hmm {
            self.hmm.validate()?;
            if self.hmm_feature_len != TEAM_SCHEMA.len() {
                return Err(Error::config(
                    "hmm.feature_len",
                    format!("team features have length {}", TEAM_SCHEMA.len()),
                ));
            }
            if !(1..=Action::ALL.len()).contains(&self.n_actions) {
                return Err(Error::config(
                    "hmm.n_actions",
                    format!("must be in 1..={}", Action::ALL.len()),
                ));
            }
        }
        if self.queue_capacity == 0 {
            return Err(Error::config("backend.queue_capacity", "must be >= 1"));
        }
        let d = &self.dataset;
        if d.agents < 2 {
            return Err(Error::config("dataset.agents", "must be >= 2"));
        }
        if d.frames < 3 {
            return Err(Error::config("dataset.frames", "must be >= 3"));
        }
        if !(d.noise_sigma.is_finite() && d.noise_sigma >= 0.0) {
            return Err(Error::config("dataset.noise_sigma", "must be finite and >= 0"));
        }
        Ok(())
    }

    /// The actions the bank is trained on, in canonical order.
    pub fn actions(&self) -> &'static [Action] {
        &Action::ALL[..self.n_actions]
    }

    /// Enabled stages in pipeline order.
    pub fn stage_plan(&self) -> Vec<&'static str> {
        STAGES.into_iter().filter(|s| self.stages.get(s)).collect()
    }
}

pub fn parse_config_str(text: &str) -> Result<FrameworkConfig> {
    let mut cfg = FrameworkConfig::default();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(i + 1, "expected `section.key = value`"))?;
        cfg.set(k.trim(), v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<FrameworkConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)
}
