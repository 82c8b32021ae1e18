//! Placement cost model: per-task processing time on the host or on an
//! accelerator node, plus transfer costs on edges between placed tasks.
//!
//! T = sum of pt_cpu over host tasks + sum of pt_gpu over accelerator tasks
//!   + sum of ct_gpu_cpu over edges whose endpoints sit on different device
//!     kinds + sum of ct_node_node over edges between accelerators on
//!     different nodes.
//!
//! File format, one directive per line (`#` comments allowed):
//!
//! ```text
//! nodes 2
//! task detect 4.0 1.5
//! task source 0 0 cpu
//! edge source detect 0.2 0.0
//! ```
//!
//! A trailing `cpu` or `gpu:N` on a task pins its placement.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Exhaustive search is limited to this many tasks.
pub const MAX_EXHAUSTIVE_TASKS: usize = 20;
/// And to this many enumerated placements.
const MAX_PLACEMENTS: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Placement {
    Cpu,
    Gpu(u32),
}

impl Placement {
    /// Lexicographic code used for tie-breaking: Cpu = 0, Gpu(n) = n + 1.
    pub fn code(self) -> u64 {
        match self {
            Placement::Cpu => 0,
            Placement::Gpu(n) => n as u64 + 1,
        }
    }

    fn from_code(c: u64) -> Placement {
        if c == 0 {
            Placement::Cpu
        } else {
            Placement::Gpu((c - 1) as u32)
        }
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Placement::Cpu => f.write_str("cpu"),
            Placement::Gpu(n) => write!(f, "gpu:{n}"),
        }
    }
}

impl FromStr for Placement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "cpu" {
            return Ok(Placement::Cpu);
        }
        s.strip_prefix("gpu:")
            .and_then(|n| n.parse().ok())
            .map(Placement::Gpu)
            .ok_or_else(|| Error::Invalid(format!("bad placement `{s}` (expected cpu or gpu:N)")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub name: String,
    pub pt_cpu: f64,
    pub pt_gpu: f64,
    pub pin: Option<Placement>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub ct_gpu_cpu: f64,
    pub ct_node_node: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    tasks: Vec<Task>,
    edges: Vec<Edge>,
    n_nodes: u32,
}

/// The four partial sums of T, kept separate for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostBreakdown {
    pub pt_cpu: f64,
    pub pt_gpu: f64,
    pub ct_gpu_cpu: f64,
    pub ct_node_node: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.pt_cpu + self.pt_gpu + self.ct_gpu_cpu + self.ct_node_node
    }
}

fn cost_ok(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}

impl CostModel {
    pub fn new(tasks: Vec<Task>, edges: Vec<Edge>, n_nodes: u32) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::Invalid("cost model needs at least one accelerator node".into()));
        }
        for (i, t) in tasks.iter().enumerate() {
            if tasks[..i].iter().any(|u| u.name == t.name) {
                return Err(Error::Invalid(format!("duplicate task `{}`", t.name)));
            }
            if !cost_ok(t.pt_cpu) || !cost_ok(t.pt_gpu) {
                return Err(Error::Invalid(format!(
                    "task `{}` has a negative or non-finite cost",
                    t.name
                )));
            }
            if let Some(Placement::Gpu(n)) = t.pin {
                if n >= n_nodes {
                    return Err(Error::Invalid(format!("task `{}` pinned to missing node {n}", t.name)));
                }
            }
        }
        for e in &edges {
            if e.from >= tasks.len() || e.to >= tasks.len() {
                return Err(Error::Invalid("edge endpoint names no task".into()));
            }
            if !cost_ok(e.ct_gpu_cpu) || !cost_ok(e.ct_node_node) {
                return Err(Error::Invalid("edge has a negative or non-finite cost".into()));
            }
        }
        Ok(CostModel { tasks, edges, n_nodes })
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn n_nodes(&self) -> u32 {
        self.n_nodes
    }

    pub fn task_index(&self, name: &str) -> Option<usize> {
        self.tasks.iter().position(|t| t.name == name)
    }

    fn check_placement(&self, p: &[Placement]) -> Result<()> {
        if p.len() != self.tasks.len() {
            return Err(Error::Invalid(format!(
                "placement covers {} of {} tasks",
                p.len(),
                self.tasks.len()
            )));
        }
        for (t, &pl) in self.tasks.iter().zip(p) {
            if let Placement::Gpu(n) = pl {
                if n >= self.n_nodes {
                    return Err(Error::Invalid(format!("task `{}` placed on missing node {n}", t.name)));
                }
            }
            if t.pin.is_some_and(|pin| pin != pl) {
                return Err(Error::Invalid(format!("task `{}` is pinned elsewhere", t.name)));
            }
        }
        Ok(())
    }

    /// Each sum runs in task or edge order.
    pub fn breakdown(&self, p: &[Placement]) -> Result<CostBreakdown> {
        self.check_placement(p)?;
        let mut b = CostBreakdown::default();
        for (t, pl) in self.tasks.iter().zip(p) {
            match pl {
                Placement::Cpu => b.pt_cpu += t.pt_cpu,
                Placement::Gpu(_) => b.pt_gpu += t.pt_gpu,
            }
        }
        for e in &self.edges {
            match (p[e.from], p[e.to]) {
                (Placement::Cpu, Placement::Gpu(_)) | (Placement::Gpu(_), Placement::Cpu) => {
                    b.ct_gpu_cpu += e.ct_gpu_cpu
                }
                _ => {}
            }
        }
        for e in &self.edges {
            if let (Placement::Gpu(a), Placement::Gpu(c)) = (p[e.from], p[e.to]) {
                if a != c {
                    b.ct_node_node += e.ct_node_node;
                }
            }
        }
        Ok(b)
    }
}

pub fn estimate_total_time(m: &CostModel, placement: &[Placement]) -> Result<f64> {
    Ok(m.breakdown(placement)?.total())
}

/// Exhaustive search over every placement that respects pins. Ties go to
/// the lexicographically smallest placement code, task 0 most significant.
pub fn optimize_placement(m: &CostModel) -> Result<(Vec<Placement>, f64)> {
    let n = m.tasks.len();
    if n > MAX_EXHAUSTIVE_TASKS {
        return Err(Error::PlacementBound {
            tasks: n,
            bound: MAX_EXHAUSTIVE_TASKS,
        });
    }
    let radix = m.n_nodes as u64 + 1;
    let choices: Vec<Vec<u64>> = m
        .tasks
        .iter()
        .map(|t| match t.pin {
            Some(p) => vec![p.code()],
            None => (0..radix).collect(),
        })
        .collect();
    let count = choices
        .iter()
        .try_fold(1u64, |acc, c| acc.checked_mul(c.len() as u64))
        .filter(|&c| c <= MAX_PLACEMENTS)
        .ok_or(Error::PlacementBound {
            tasks: n,
            bound: MAX_EXHAUSTIVE_TASKS,
        })?;

    let mut digits = vec![0usize; n];
    let mut place: Vec<Placement> = choices.iter().map(|c| Placement::from_code(c[0])).collect();
    let mut best = (place.clone(), estimate_total_time(m, &place)?);
    for _ in 1..count {
        // odometer, last task least significant
        let mut i = n;
        while i > 0 {
            i -= 1;
            digits[i] += 1;
            if digits[i] < choices[i].len() {
                place[i] = Placement::from_code(choices[i][digits[i]]);
                break;
            }
            digits[i] = 0;
            place[i] = Placement::from_code(choices[i][0]);
        }
        let t = estimate_total_time(m, &place)?;
        if t < best.1 {
            best = (place.clone(), t);
        }
    }
    Ok(best)
}

pub fn write_cost_model(m: &CostModel) -> String {
    let mut out = format!("nodes {}\n", m.n_nodes);
    for t in &m.tasks {
        out.push_str(&format!("task {} {} {}", t.name, t.pt_cpu, t.pt_gpu));
        if let Some(p) = t.pin {
            out.push_str(&format!(" {p}"));
        }
        out.push('\n');
    }
    for e in &m.edges {
        out.push_str(&format!(
            "edge {} {} {} {}\n",
            m.tasks[e.from].name, m.tasks[e.to].name, e.ct_gpu_cpu, e.ct_node_node
        ));
    }
    out
}

pub fn parse_cost_model(text: &str) -> Result<CostModel> {
    let mut n_nodes = 1;
    let mut tasks: Vec<Task> = Vec::new();
    let mut raw_edges = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| cost_ok(*v))
                .ok_or_else(|| Error::parse(line_no, format!("bad cost `{s}`")))
        };
        match f[0] {
            "nodes" if f.len() == 2 => {
                n_nodes = f[1].parse().map_err(|_| Error::parse(line_no, "bad node count"))?;
            }
            "task" if f.len() == 4 || f.len() == 5 => tasks.push(Task {
                name: f[1].to_string(),
                pt_cpu: num(f[2])?,
                pt_gpu: num(f[3])?,
                pin: match f.get(4) {
                    Some(p) => Some(p.parse().map_err(|e: Error| Error::parse(line_no, e.to_string()))?),
                    None => None,
                },
            }),
            "edge" if f.len() == 5 => {
                raw_edges.push((line_no, f[1].to_string(), f[2].to_string(), num(f[3])?, num(f[4])?))
            }
            _ => return Err(Error::parse(line_no, format!("unrecognized line `{line}`"))),
        }
    }
    let mut edges = Vec::with_capacity(raw_edges.len());
    for (line_no, from, to, gc, nn) in raw_edges {
        let idx = |name: &str| {
            tasks
                .iter()
                .position(|t| t.name == name)
                .ok_or_else(|| Error::parse(line_no, format!("edge names unknown task `{name}`")))
        };
        edges.push(Edge {
            from: idx(&from)?,
            to: idx(&to)?,
            ct_gpu_cpu: gc,
            ct_node_node: nn,
        });
    }
    CostModel::new(tasks, edges, n_nodes)
}

pub fn load_cost_model(path: &Path) -> Result<CostModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cost_model(&text)
}
