//! Multi-agent formation scenarios for the seven teamwork actions.
//!
//! Every scenario moves a team along a random heading at roughly one unit
//! per frame. Agent positions are rigid template offsets in the team's
//! (along-heading, lateral) frame, animated per action, plus i.i.d. Gaussian
//! position noise.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Noise level used for "moderate" datasets, in position units: one frame
/// of team travel. Template spacing is 6 to 10 units.
pub const NOISE_MODERATE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    TravelingColumn,
    TravelingLine,
    TravelingBox,
    BoundingOverSearch,
    Wedge,
    TeamSplit,
    TeamMerge,
}

impl Action {
    pub const ALL: [Action; 7] = [
        Action::TravelingColumn,
        Action::TravelingLine,
        Action::TravelingBox,
        Action::BoundingOverSearch,
        Action::Wedge,
        Action::TeamSplit,
        Action::TeamMerge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Action::TravelingColumn => "TravelingColumn",
            Action::TravelingLine => "TravelingLine",
            Action::TravelingBox => "TravelingBox",
            Action::BoundingOverSearch => "BoundingOverSearch",
            Action::Wedge => "Wedge",
            Action::TeamSplit => "TeamSplit",
            Action::TeamMerge => "TeamMerge",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Action::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| Error::UnknownLabel(s.trim().to_string()))
    }
}

/// Ground-truth agent roles, derived from each agent's noise-free position
/// relative to the team centroid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Point,
    LeftFlank,
    RightFlank,
    Rear,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Point, Role::LeftFlank, Role::RightFlank, Role::Rear];

    pub fn name(self) -> &'static str {
        match self {
            Role::Point => "point",
            Role::LeftFlank => "left_flank",
            Role::RightFlank => "right_flank",
            Role::Rear => "rear",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// `along` is positive ahead of the centroid, `lateral` positive to the
    /// left of the heading.
    pub fn from_offset(along: f64, lateral: f64) -> Role {
        if along.abs() >= lateral.abs() {
            if along >= 0.0 {
                Role::Point
            } else {
                Role::Rear
            }
        } else if lateral > 0.0 {
            Role::LeftFlank
        } else {
            Role::RightFlank
        }
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Role::ALL
            .into_iter()
            .find(|r| r.name() == s.trim())
            .ok_or_else(|| Error::UnknownLabel(s.trim().to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentTrajectory {
    pub agent_id: u32,
    samples: Vec<Sample>,
}

impl AgentTrajectory {
    pub fn new(agent_id: u32, samples: Vec<Sample>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidSpec(format!(
                "agent {agent_id}: trajectory needs at least 2 samples"
            )));
        }
        if samples.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::InvalidSpec(format!(
                "agent {agent_id}: sample times must be strictly increasing"
            )));
        }
        if samples.iter().any(|s| !s.x.is_finite() || !s.y.is_finite()) {
            return Err(Error::InvalidSpec(format!("agent {agent_id}: non-finite position")));
        }
        Ok(AgentTrajectory { agent_id, samples })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn at(&self, t: usize) -> Option<(f64, f64)> {
        self.samples
            .binary_search_by_key(&t, |s| s.t)
            .ok()
            .map(|i| (self.samples[i].x, self.samples[i].y))
    }

    pub fn first_t(&self) -> usize {
        self.samples[0].t
    }

    pub fn last_t(&self) -> usize {
        self.samples[self.samples.len() - 1].t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub action: Action,
    pub agents: usize,
    pub length: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(action: Action, agents: usize, length: usize, noise_sigma: f64, seed: u64) -> Self {
        ScenarioSpec {
            action,
            agents,
            length,
            noise_sigma,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.agents < 2 {
            return Err(Error::InvalidSpec("at least 2 agents required".into()));
        }
        if self.length < 10 {
            return Err(Error::InvalidSpec("length must be >= 10 frames".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidSpec("noise_sigma must be finite and >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub action: Action,
    pub trajectories: Vec<AgentTrajectory>,
    /// `roles[t][agent]`, ground truth from the noise-free template.
    pub roles: Vec<Vec<Role>>,
}

const BASE_SPEED: f64 = 1.0;
const COLUMN_SPACING: f64 = 8.0;
const LINE_SPACING: f64 = 8.0;
const BOX_SPACING: f64 = 6.0;
const WEDGE_SPACING: f64 = 10.0;
const SPLIT_SPACING: f64 = 4.0;
/// Lateral distance each split group travels over a split/merge scenario,
/// as a multiple of the starting spacing.
const SPLIT_GROWTH: f64 = 6.0;
const BOUND_PERIOD: usize = 8;

/// Template offsets (along, lateral) for a formation, centered on zero.
fn template(action: Action, n: usize, scale: f64) -> Vec<(f64, f64)> {
    let raw: Vec<(f64, f64)> = match action {
        Action::TravelingColumn => (0..n).map(|k| (-(k as f64) * COLUMN_SPACING, 0.0)).collect(),
        Action::TravelingLine => (0..n).map(|k| (0.0, k as f64 * LINE_SPACING)).collect(),
        Action::TravelingBox | Action::BoundingOverSearch => (0..n)
            .map(|k| {
                let rank = (k / 2) as f64;
                let side = if k % 2 == 0 { 0.5 } else { -0.5 };
                (-rank * BOX_SPACING, side * BOX_SPACING)
            })
            .collect(),
        Action::Wedge => (0..n)
            .map(|k| {
                if k == 0 {
                    (0.0, 0.0)
                } else {
                    let depth = k.div_ceil(2) as f64;
                    let side = if k % 2 == 1 { 1.0 } else { -1.0 };
                    (-depth * WEDGE_SPACING, side * depth * WEDGE_SPACING)
                }
            })
            .collect(),
        Action::TeamSplit | Action::TeamMerge => (0..n)
            .map(|k| {
                let rank = (k / 2) as f64;
                let side = if k % 2 == 0 { 0.5 } else { -0.5 };
                (-rank * SPLIT_SPACING, side * SPLIT_SPACING)
            })
            .collect(),
    };
    let (ma, ml) = mean(&raw);
    raw.into_iter()
        .map(|(a, l)| ((a - ma) * scale, (l - ml) * scale))
        .collect()
}

fn mean(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let (sa, sl) = pts.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    (sa / n, sl / n)
}

/// Noise-free offsets of every agent at frame `t` relative to the nominal
/// team anchor, which advances `speed` units per frame along the heading.
fn offsets_at(action: Action, base: &[(f64, f64)], t: usize, length: usize, speed: f64) -> Vec<(f64, f64)> {
    let n = base.len();
    match action {
        Action::TeamSplit | Action::TeamMerge => {
            let span = (length - 1) as f64;
            let frac = match action {
                Action::TeamSplit => t as f64 / span,
                _ => 1.0 - t as f64 / span,
            };
            let growth = SPLIT_GROWTH * SPLIT_SPACING * frac;
            base.iter()
                .enumerate()
                .map(|(k, &(a, l))| {
                    let side = if k % 2 == 0 { 1.0 } else { -1.0 };
                    (a, l + side * growth)
                })
                .collect()
        }
        Action::BoundingOverSearch => {
            // Two elements alternate: one bounds forward at twice the team
            // speed while the other holds, back element first.
            let group = |k: usize| -> usize {
                let rank = k / 2;
                let ranks = n.div_ceil(2);
                usize::from(rank >= ranks.div_ceil(2))
            };
            let mut moved = [0.0f64; 2];
            for step in 0..t {
                let phase = step / BOUND_PERIOD;
                let mover = 1 - phase % 2;
                moved[mover] += 2.0 * speed;
            }
            let drift = speed * t as f64;
            (0..n)
                .map(|k| {
                    let (a, l) = base[k];
                    (a + moved[group(k)] - drift, l)
                })
                .collect()
        }
        _ => base.to_vec(),
    }
}

/// Generates a scenario. Deterministic in `spec`.
pub fn synth_team_scenario(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let heading: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let scale: f64 = rng.random_range(0.9..1.1);
    let speed: f64 = BASE_SPEED * rng.random_range(0.85..1.15);
    let origin = (rng.random_range(0.0..100.0), rng.random_range(0.0..100.0));
    let (hx, hy) = (heading.cos(), heading.sin());
    // left normal
    let (nx, ny) = (-hy, hx);
    let base = template(spec.action, spec.agents, scale);

    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::InvalidSpec(format!("noise: {e}")))?;
    let mut samples: Vec<Vec<Sample>> = vec![Vec::with_capacity(spec.length); spec.agents];
    let mut roles = Vec::with_capacity(spec.length);
    for t in 0..spec.length {
        let offsets = offsets_at(spec.action, &base, t, spec.length, speed);
        let (ca, cl) = mean(&offsets);
        roles.push(
            offsets
                .iter()
                .map(|&(a, l)| Role::from_offset(a - ca, l - cl))
                .collect(),
        );
        let travel = speed * t as f64;
        for (k, &(a, l)) in offsets.iter().enumerate() {
            let along = travel + a;
            let mut x = origin.0 + along * hx + l * nx;
            let mut y = origin.1 + along * hy + l * ny;
            if spec.noise_sigma > 0.0 {
                x += noise.sample(&mut rng);
                y += noise.sample(&mut rng);
            }
            samples[k].push(Sample { t, x, y });
        }
    }
    let trajectories = samples
        .into_iter()
        .enumerate()
        .map(|(k, s)| AgentTrajectory::new(k as u32, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(Scenario {
        action: spec.action,
        trajectories,
        roles,
    })
}

/// Mean pairwise distance between agents at frame `t`.
pub fn mean_pairwise_distance(trajs: &[AgentTrajectory], t: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = trajs.iter().map(|a| a.at(t)).collect::<Option<_>>()?;
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            sum += ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt();
            pairs += 1;
        }
    }
    (pairs > 0).then(|| sum / pairs as f64)
}

// --- text interchange -------------------------------------------------------

pub fn write_trajectories(trajs: &[AgentTrajectory]) -> String {
    let mut rows: Vec<(usize, u32, f64, f64)> = trajs
        .iter()
        .flat_map(|a| a.samples.iter().map(move |s| (s.t, a.agent_id, s.x, s.y)))
        .collect();
    rows.sort_by_key(|a| (a.0, a.1));
    let mut out = String::from("# t agent_id x y\n");
    for (t, id, x, y) in rows {
        out.push_str(&format!("{t} {id} {x} {y}\n"));
    }
    out
}

pub fn parse_trajectories(text: &str) -> Result<Vec<AgentTrajectory>> {
    let mut by_agent: std::collections::BTreeMap<u32, Vec<Sample>> = Default::default();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(Error::parse(n + 1, "expected `t agent_id x y`"));
        }
        let t = f[0].parse().map_err(|_| Error::parse(n + 1, "bad t"))?;
        let id = f[1].parse().map_err(|_| Error::parse(n + 1, "bad agent_id"))?;
        let x = f[2].parse().map_err(|_| Error::parse(n + 1, "bad x"))?;
        let y = f[3].parse().map_err(|_| Error::parse(n + 1, "bad y"))?;
        by_agent.entry(id).or_default().push(Sample { t, x, y });
    }
    by_agent
        .into_iter()
        .map(|(id, mut s)| {
            s.sort_by_key(|s| s.t);
            AgentTrajectory::new(id, s)
        })
        .collect()
}

pub fn write_roles(roles: &[Vec<Role>], agent_ids: &[u32], first_frame: usize) -> String {
    let mut out = String::from("# frame agent_id role\n");
    for (i, frame_roles) in roles.iter().enumerate() {
        for (k, r) in frame_roles.iter().enumerate() {
            out.push_str(&format!("{} {} {}\n", first_frame + i, agent_ids[k], r.name()));
        }
    }
    out
}

/// Writes `trajectories.txt`, `scenario.label` and `roles.txt` into `dir`.
pub fn save_scenario(dir: &Path, scenario: &Scenario) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, body: String| {
        let p = dir.join(name);
        fs::write(&p, body).map_err(|e| Error::io(&p, e))
    };
    write("trajectories.txt", write_trajectories(&scenario.trajectories))?;
    write("scenario.label", format!("{}\n", scenario.action))?;
    let ids: Vec<u32> = scenario.trajectories.iter().map(|a| a.agent_id).collect();
    write("roles.txt", write_roles(&scenario.roles, &ids, 0))?;
    Ok(())
}

/// Loads trajectories and, when present, the action label of a scenario
/// directory.
pub fn load_scenario(dir: &Path) -> Result<(Vec<AgentTrajectory>, Option<Action>)> {
    let tp = dir.join("trajectories.txt");
    let text = fs::read_to_string(&tp).map_err(|e| Error::io(&tp, e))?;
    let trajs = parse_trajectories(&text)?;
    let lp = dir.join("scenario.label");
    let label = if lp.exists() {
        let s = fs::read_to_string(&lp).map_err(|e| Error::io(&lp, e))?;
        Some(s.parse()?)
    } else {
        None
    };
    Ok((trajs, label))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(action: Action, noise: f64) -> ScenarioSpec {
        ScenarioSpec::new(action, 4, 60, noise, 7)
    }

    #[test]
    fn rejects_single_agent() {
        let mut s = spec(Action::Wedge, 0.0);
        s.agents = 1;
        assert!(matches!(synth_team_scenario(&s), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn merge_closes_split_opens() {
        let m = synth_team_scenario(&spec(Action::TeamMerge, 0.0)).unwrap();
        let first = mean_pairwise_distance(&m.trajectories, 0).unwrap();
        let last = mean_pairwise_distance(&m.trajectories, 59).unwrap();
        assert!(last < first);
        let s = synth_team_scenario(&spec(Action::TeamSplit, 0.0)).unwrap();
        let first = mean_pairwise_distance(&s.trajectories, 0).unwrap();
        let last = mean_pairwise_distance(&s.trajectories, 59).unwrap();
        assert!(last > 2.0 * first);
    }

    #[test]
    fn column_is_collinear_along_heading() {
        let s = synth_team_scenario(&spec(Action::TravelingColumn, 0.0)).unwrap();
        for t in 0..60 {
            let p: Vec<(f64, f64)> = s.trajectories.iter().map(|a| a.at(t).unwrap()).collect();
            let q = s.trajectories[0].at(if t == 0 { 1 } else { t - 1 }).unwrap();
            // heading from agent 0's own motion
            let (hx, hy) = if t == 0 {
                (q.0 - p[0].0, q.1 - p[0].1)
            } else {
                (p[0].0 - q.0, p[0].1 - q.1)
            };
            let norm = (hx * hx + hy * hy).sqrt();
            for pk in &p[1..] {
                let cross = ((pk.0 - p[0].0) * hy - (pk.1 - p[0].1) * hx) / norm;
                assert!(cross.abs() < 1e-6, "t={t} cross={cross}");
            }
        }
    }

    #[test]
    fn deterministic_for_seed() {
        for a in Action::ALL {
            let x = synth_team_scenario(&spec(a, 0.5)).unwrap();
            let y = synth_team_scenario(&spec(a, 0.5)).unwrap();
            assert_eq!(x, y);
            assert_eq!(write_trajectories(&x.trajectories), write_trajectories(&y.trajectories));
        }
    }

    #[test]
    fn trajectory_text_round_trip() {
        let s = synth_team_scenario(&spec(Action::Wedge, 0.3)).unwrap();
        let text = write_trajectories(&s.trajectories);
        let back = parse_trajectories(&text).unwrap();
        assert_eq!(back, s.trajectories);
    }

    #[test]
    fn trajectory_invariants() {
        assert!(AgentTrajectory::new(0, vec![Sample { t: 0, x: 0.0, y: 0.0 }]).is_err());
        let s = vec![Sample { t: 1, x: 0.0, y: 0.0 }, Sample { t: 1, x: 1.0, y: 0.0 }];
        assert!(AgentTrajectory::new(0, s).is_err());
    }

    #[test]
    fn role_geometry() {
        assert_eq!(Role::from_offset(5.0, 1.0), Role::Point);
        assert_eq!(Role::from_offset(-5.0, 1.0), Role::Rear);
        assert_eq!(Role::from_offset(1.0, 5.0), Role::LeftFlank);
        assert_eq!(Role::from_offset(1.0, -5.0), Role::RightFlank);
    }
}
