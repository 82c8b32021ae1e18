//! Team and per-agent motion features computed from trajectories.

use super::{DiscretizerSpec, FeatureSpec, FeatureVector, ObservationSequence};
use crate::error::{Error, Result};
use crate::frame_io::AgentTrajectory;

pub const TEAM_SCHEMA: [&str; 6] = [
    "speed",
    "heading_change",
    "cohesion",
    "spread",
    "lateral",
    "formation_error",
];

pub const AGENT_SCHEMA: [&str; 3] = ["along", "lateral", "rel_speed"];

struct Step {
    prev: Vec<(f64, f64)>,
    cur: Vec<(f64, f64)>,
    centroid: (f64, f64),
    team_step: (f64, f64),
    speed: f64,
    /// Unit heading of the centroid step, (1, 0) when the team is still.
    u: (f64, f64),
}

fn step(trajs: &[AgentTrajectory], t: usize) -> Result<Step> {
    if t == 0 {
        return Err(Error::Invalid("features need a previous frame; t must be >= 1".into()));
    }
    if trajs.is_empty() {
        return Err(Error::Invalid("no trajectories".into()));
    }
    let at = |t: usize| -> Result<Vec<(f64, f64)>> {
        trajs
            .iter()
            .map(|a| {
                a.at(t)
                    .ok_or_else(|| Error::Invalid(format!("agent {} has no sample at frame {t}", a.agent_id)))
            })
            .collect()
    };
    let prev = at(t - 1)?;
    let cur = at(t)?;
    let c0 = centroid(&prev);
    let c1 = centroid(&cur);
    let team_step = (c1.0 - c0.0, c1.1 - c0.1);
    let speed = team_step.0.hypot(team_step.1);
    let u = if speed > 0.0 {
        (team_step.0 / speed, team_step.1 / speed)
    } else {
        (1.0, 0.0)
    };
    Ok(Step {
        prev,
        cur,
        centroid: c1,
        team_step,
        speed,
        u,
    })
}

fn centroid(p: &[(f64, f64)]) -> (f64, f64) {
    let n = p.len() as f64;
    let (sx, sy) = p.iter().fold((0.0, 0.0), |a, q| (a.0 + q.0, a.1 + q.1));
    (sx / n, sy / n)
}

fn std_dev(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt()
}

fn wrap_angle(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let r = a.rem_euclid(tau);
    if r > std::f64::consts::PI {
        r - tau
    } else {
        r
    }
}

/// Team features between frames `t - 1` and `t`:
///
/// - `speed`: centroid displacement
/// - `heading_change`: mean absolute angle between each agent's step and
///   the centroid step (agents or teams that did not move contribute 0)
/// - `cohesion`: mean pairwise distance
/// - `spread`, `lateral`: standard deviation of agent offsets from the
///   centroid along and across the team heading
/// - `formation_error`: RMS deviation of agent steps from the centroid step
pub fn team_features(trajs: &[AgentTrajectory], t: usize) -> Result<FeatureVector> {
    let s = step(trajs, t)?;
    let n = s.cur.len();
    let team_angle = s.team_step.1.atan2(s.team_step.0);
    let mut heading = 0.0;
    let mut resid = 0.0;
    for (p, q) in s.prev.iter().zip(&s.cur) {
        let d = (q.0 - p.0, q.1 - p.1);
        if s.speed > 0.0 && (d.0 != 0.0 || d.1 != 0.0) {
            heading += wrap_angle(d.1.atan2(d.0) - team_angle).abs();
        }
        resid += (d.0 - s.team_step.0).powi(2) + (d.1 - s.team_step.1).powi(2);
    }
    let mut cohesion = 0.0;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            cohesion += (s.cur[i].0 - s.cur[j].0).hypot(s.cur[i].1 - s.cur[j].1);
            pairs += 1;
        }
    }
    if pairs > 0 {
        cohesion /= pairs as f64;
    }
    let (along, lateral) = offsets(&s);
    FeatureVector::from_static(
        &TEAM_SCHEMA,
        vec![
            s.speed,
            heading / n as f64,
            cohesion,
            std_dev(&along),
            std_dev(&lateral),
            (resid / n as f64).sqrt(),
        ],
    )
}

/// Offsets from the centroid projected on the heading and its left normal.
fn offsets(s: &Step) -> (Vec<f64>, Vec<f64>) {
    let (ux, uy) = s.u;
    s.cur
        .iter()
        .map(|p| {
            let (dx, dy) = (p.0 - s.centroid.0, p.1 - s.centroid.1);
            (dx * ux + dy * uy, -dx * uy + dy * ux)
        })
        .unzip()
}

/// Per-agent features at `t`: offset along and across the team heading, and
/// the agent's step length minus the centroid's.
pub fn agent_features(trajs: &[AgentTrajectory], t: usize) -> Result<Vec<FeatureVector>> {
    let s = step(trajs, t)?;
    let (along, lateral) = offsets(&s);
    s.prev
        .iter()
        .zip(&s.cur)
        .enumerate()
        .map(|(i, (p, q))| {
            let rel = (q.0 - p.0).hypot(q.1 - p.1) - s.speed;
            FeatureVector::from_static(&AGENT_SCHEMA, vec![along[i], lateral[i], rel])
        })
        .collect()
}

/// Default team discretizer: 2 x 2 x 3 x 3 x 3 x 2 = 216 joint symbols.
pub fn team_spec() -> DiscretizerSpec {
    let f = |name, cuts: &[f64], symbols: &[&str]| FeatureSpec::threshold(name, cuts, symbols).expect("static spec");
    DiscretizerSpec::new(vec![
        f("speed", &[0.5], &["slow", "fast"]),
        f("heading_change", &[0.5], &["aligned", "scattered"]),
        f("cohesion", &[10.0, 20.0], &["merged", "loose", "separated"]),
        f("spread", &[1.5, 5.0], &["flat", "medium", "deep"]),
        f("lateral", &[1.5, 5.0], &["narrow", "medium", "wide"]),
        f("formation_error", &[0.5], &["rigid", "shifting"]),
    ])
    .expect("static spec")
}

/// Default per-agent discretizer used for role assignment.
pub fn role_spec() -> DiscretizerSpec {
    let f = |name, cuts: &[f64], symbols: &[&str]| FeatureSpec::threshold(name, cuts, symbols).expect("static spec");
    DiscretizerSpec::new(vec![
        f(
            "along",
            &[-6.0, -2.0, 2.0, 6.0],
            &["far_back", "back", "level", "ahead", "far_ahead"],
        ),
        f(
            "lateral",
            &[-6.0, -2.0, 2.0, 6.0],
            &["far_right", "right", "center", "left", "far_left"],
        ),
        f("rel_speed", &[-0.5, 0.5], &["slower", "same", "faster"]),
    ])
    .expect("static spec")
}

/// Joint team symbols for every frame after the first one all agents share.
pub fn observe(trajs: &[AgentTrajectory], spec: &DiscretizerSpec, team_id: &str) -> Result<ObservationSequence> {
    let (first, last) = common_range(trajs)?;
    let symbols = (first + 1..=last)
        .map(|t| spec.symbol(&team_features(trajs, t)?))
        .collect::<Result<Vec<_>>>()?;
    ObservationSequence::with_source(symbols, spec.alphabet_size(), team_id.to_string(), (first + 1, last))
}

pub(crate) fn common_range(trajs: &[AgentTrajectory]) -> Result<(usize, usize)> {
    let first = trajs.iter().map(|a| a.first_t()).max();
    let last = trajs.iter().map(|a| a.last_t()).min();
    match (first, last) {
        (Some(f), Some(l)) if l > f => Ok((f, l)),
        _ => Err(Error::Invalid("trajectories share fewer than 2 frames".into())),
    }
}
