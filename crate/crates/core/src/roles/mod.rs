//! ID3 decision trees and forests over discrete features, used to assign
//! team roles to agents.

mod io;
mod stabilize;

pub use io::{load_forest, parse_forest, save_forest, write_forest};
pub use stabilize::{assign_roles, RoleStabilizer};

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discretize::{agent_features, DiscretizerSpec};
use crate::error::{Error, Result};
use crate::frame_io::AgentTrajectory;
use crate::runtime::Backend;

/// Gains closer than this are treated as equal, so the lower feature index
/// wins regardless of rounding.
pub const GAIN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Id3Mode {
    /// One tree; the leaf histogram's argmax.
    TreeLeaf,
    /// Several bagged trees; argmax of the summed leaf histograms.
    ForestLeaves,
}

impl fmt::Display for Id3Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Id3Mode::TreeLeaf => "TreeLeaf",
            Id3Mode::ForestLeaves => "ForestLeaves",
        })
    }
}

impl FromStr for Id3Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "TreeLeaf" => Ok(Id3Mode::TreeLeaf),
            "ForestLeaves" => Ok(Id3Mode::ForestLeaves),
            _ => Err(Error::config("id3.mode", format!("unknown mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Id3Config {
    pub mode: Id3Mode,
    pub n_trees: usize,
    pub n_classes: usize,
    pub max_depth: usize,
    pub min_samples: usize,
    pub feature_bagging_fraction: f64,
    pub seed: u64,
}

impl Id3Config {
    pub fn tree(n_classes: usize) -> Self {
        Id3Config {
            mode: Id3Mode::TreeLeaf,
            n_trees: 1,
            n_classes,
            max_depth: 16,
            min_samples: 2,
            feature_bagging_fraction: 0.7,
            seed: 0,
        }
    }

    pub fn forest(n_classes: usize, n_trees: usize) -> Self {
        Id3Config {
            mode: Id3Mode::ForestLeaves,
            n_trees,
            ..Id3Config::tree(n_classes)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::config("id3.n_trees", "must be >= 1"));
        }
        if self.mode == Id3Mode::TreeLeaf && self.n_trees != 1 {
            return Err(Error::config("id3.n_trees", "TreeLeaf mode uses exactly one tree"));
        }
        if self.n_classes < 2 {
            return Err(Error::config("id3.n_classes", "must be >= 2"));
        }
        if !(self.feature_bagging_fraction > 0.0 && self.feature_bagging_fraction <= 1.0) {
            return Err(Error::config("id3.feature_bagging_fraction", "must be in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    /// Splits on `feature`; `children[v]` is the node for symbol `v`.
    Internal { feature: usize, children: Vec<usize> },
    /// Training class counts that reached this leaf.
    Leaf { hist: Vec<usize> },
}

/// Flat preorder node array, root at index 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn from_nodes(nodes: Vec<Node>, radices: &[usize], n_classes: usize) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidModel("tree has no nodes".into()));
        }
        for (i, n) in nodes.iter().enumerate() {
            match n {
                Node::Internal { feature, children } => {
                    let r = *radices
                        .get(*feature)
                        .ok_or_else(|| Error::InvalidModel(format!("node {i} splits on unknown feature {feature}")))?;
                    if children.len() != r {
                        return Err(Error::InvalidModel(format!("node {i} must have {r} children")));
                    }
                    // preorder: children come after their parent, so no cycles
                    if children.iter().any(|&c| c <= i || c >= nodes.len()) {
                        return Err(Error::InvalidModel(format!("node {i} has an invalid child index")));
                    }
                }
                Node::Leaf { hist } => {
                    if hist.len() != n_classes {
                        return Err(Error::InvalidModel(format!("leaf {i} must have {n_classes} counts")));
                    }
                }
            }
        }
        Ok(DecisionTree { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn leaf(&self, x: &[usize]) -> &[usize] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Internal { feature, children } => i = children[x[*feature]],
                Node::Leaf { hist } => return hist,
            }
        }
    }

    /// Depth of the deepest leaf (a single leaf has depth 0).
    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Internal { children, .. } => 1 + children.iter().map(|&c| go(t, c)).max().unwrap_or(0),
            }
        }
        go(self, 0)
    }
}

/// Trained classifier: one tree in `TreeLeaf` mode, several otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub mode: Id3Mode,
    pub n_classes: usize,
    pub radices: Vec<usize>,
    pub trees: Vec<DecisionTree>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub label: usize,
    /// Summed leaf counts, normalized.
    pub distribution: Vec<f64>,
}

/// Shannon entropy in bits.
pub fn entropy(counts: &[usize]) -> Result<f64> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::Invalid("entropy of an empty count vector".into()));
    }
    let n = total as f64;
    Ok(counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum())
}

fn histogram(y: &[usize], idx: &[usize], n_classes: usize) -> Vec<usize> {
    let mut h = vec![0; n_classes];
    for &i in idx {
        h[y[i]] += 1;
    }
    h
}

/// Information gain of splitting the examples `idx` on `feature`.
pub fn information_gain(
    x: &[Vec<usize>],
    y: &[usize],
    idx: &[usize],
    feature: usize,
    radix: usize,
    n_classes: usize,
) -> Result<f64> {
    let parent = entropy(&histogram(y, idx, n_classes))?;
    let mut child = vec![vec![0usize; n_classes]; radix];
    for &i in idx {
        child[x[i][feature]][y[i]] += 1;
    }
    let n = idx.len() as f64;
    let mut weighted = 0.0;
    for h in &child {
        let size: usize = h.iter().sum();
        if size > 0 {
            weighted += size as f64 / n * entropy(h)?;
        }
    }
    Ok(parent - weighted)
}

/// Feature with the largest gain among `allowed`; near-ties go to the
/// lowest index.
pub fn best_split(
    x: &[Vec<usize>],
    y: &[usize],
    idx: &[usize],
    allowed: &[usize],
    radices: &[usize],
    n_classes: usize,
) -> Result<Option<(usize, f64)>> {
    let mut best: Option<(usize, f64)> = None;
    for &f in allowed {
        let g = information_gain(x, y, idx, f, radices[f], n_classes)?;
        if best.is_none_or(|(_, bg)| g > bg + GAIN_EPS) {
            best = Some((f, g));
        }
    }
    Ok(best)
}

fn check_data(x: &[Vec<usize>], y: &[usize], radices: &[usize], n_classes: usize) -> Result<()> {
    if x.is_empty() {
        return Err(Error::TrainingData("no examples".into()));
    }
    if x.len() != y.len() {
        return Err(Error::TrainingData(format!(
            "{} examples but {} labels",
            x.len(),
            y.len()
        )));
    }
    if radices.is_empty() || radices.contains(&0) {
        return Err(Error::TrainingData("every feature needs a radix >= 1".into()));
    }
    for (k, row) in x.iter().enumerate() {
        check_vector(row, radices).map_err(|e| Error::TrainingData(format!("example {k}: {e}")))?;
        if y[k] >= n_classes {
            return Err(Error::TrainingData(format!(
                "example {k}: label {} >= n_classes {n_classes}",
                y[k]
            )));
        }
    }
    Ok(())
}

fn check_vector(x: &[usize], radices: &[usize]) -> Result<()> {
    if x.len() != radices.len() {
        return Err(Error::FeatureLength {
            expected: radices.len(),
            got: x.len(),
        });
    }
    match x.iter().zip(radices).find(|(v, r)| v >= r) {
        Some((&v, &r)) => Err(Error::SymbolOutOfRange { symbol: v, alphabet: r }),
        None => Ok(()),
    }
}

struct Builder<'a> {
    x: &'a [Vec<usize>],
    y: &'a [usize],
    radices: &'a [usize],
    cfg: &'a Id3Config,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn grow(&mut self, idx: &[usize], features: &[usize], depth: usize, fallback: &[usize]) -> Result<usize> {
        let at = self.nodes.len();
        if idx.is_empty() {
            self.nodes.push(Node::Leaf {
                hist: fallback.to_vec(),
            });
            return Ok(at);
        }
        let hist = histogram(self.y, idx, self.cfg.n_classes);
        let pure = hist.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || features.is_empty() || depth >= self.cfg.max_depth || idx.len() < self.cfg.min_samples {
            self.nodes.push(Node::Leaf { hist });
            return Ok(at);
        }
        let (f, _) = best_split(self.x, self.y, idx, features, self.radices, self.cfg.n_classes)?
            .expect("features is non-empty");
        self.nodes.push(Node::Internal {
            feature: f,
            children: Vec::new(),
        });
        let rest: Vec<usize> = features.iter().copied().filter(|&g| g != f).collect();
        let mut children = Vec::with_capacity(self.radices[f]);
        for v in 0..self.radices[f] {
            let sub: Vec<usize> = idx.iter().copied().filter(|&i| self.x[i][f] == v).collect();
            children.push(self.grow(&sub, &rest, depth + 1, &hist)?);
        }
        self.nodes[at] = Node::Internal { feature: f, children };
        Ok(at)
    }
}

fn grow_tree(
    x: &[Vec<usize>],
    y: &[usize],
    idx: &[usize],
    features: &[usize],
    radices: &[usize],
    cfg: &Id3Config,
) -> Result<DecisionTree> {
    let mut b = Builder {
        x,
        y,
        radices,
        cfg,
        nodes: Vec::new(),
    };
    let root_hist = histogram(y, idx, cfg.n_classes);
    b.grow(idx, features, 0, &root_hist)?;
    Ok(DecisionTree { nodes: b.nodes })
}

pub fn id3_train(x: &[Vec<usize>], y: &[usize], radices: &[usize], cfg: &Id3Config) -> Result<Forest> {
    id3_train_on(x, y, radices, cfg, &Backend::Sequential)
}

/// Trains a tree (TreeLeaf) or a bagged forest (ForestLeaves). Forest tree
/// `k` draws its bootstrap sample and feature subset from `seed + k`, and
/// trees train in parallel.
pub fn id3_train_on(
    x: &[Vec<usize>],
    y: &[usize],
    radices: &[usize],
    cfg: &Id3Config,
    backend: &Backend,
) -> Result<Forest> {
    cfg.validate()?;
    check_data(x, y, radices, cfg.n_classes)?;
    let n = x.len();
    let n_feat = radices.len();
    let trees = match cfg.mode {
        Id3Mode::TreeLeaf => {
            let idx: Vec<usize> = (0..n).collect();
            let features: Vec<usize> = (0..n_feat).collect();
            vec![grow_tree(x, y, &idx, &features, radices, cfg)?]
        }
        Id3Mode::ForestLeaves => {
            let keep = ((cfg.feature_bagging_fraction * n_feat as f64).ceil() as usize).clamp(1, n_feat);
            let ks: Vec<usize> = (0..cfg.n_trees).collect();
            backend.try_map(&ks, |&k| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(k as u64));
                let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                let mut features = sample(&mut rng, n_feat, keep).into_vec();
                features.sort_unstable();
                grow_tree(x, y, &idx, &features, radices, cfg)
            })?
        }
    };
    Ok(Forest {
        mode: cfg.mode,
        n_classes: cfg.n_classes,
        radices: radices.to_vec(),
        trees,
    })
}

/// Classifies `x`; ties go to the lowest class index.
pub fn classify(forest: &Forest, x: &[usize]) -> Result<Classification> {
    check_vector(x, &forest.radices)?;
    let mut sum = vec![0usize; forest.n_classes];
    let trees = match forest.mode {
        Id3Mode::TreeLeaf => &forest.trees[..1],
        Id3Mode::ForestLeaves => &forest.trees[..],
    };
    for t in trees {
        for (s, c) in sum.iter_mut().zip(t.leaf(x)) {
            *s += c;
        }
    }
    let mut label = 0;
    for (c, &v) in sum.iter().enumerate() {
        if v > sum[label] {
            label = c;
        }
    }
    let total: usize = sum.iter().sum();
    let distribution = if total > 0 {
        sum.iter().map(|&v| v as f64 / total as f64).collect()
    } else {
        vec![0.0; forest.n_classes]
    };
    Ok(Classification { label, distribution })
}

pub fn classify_batch(forest: &Forest, xs: &[Vec<usize>], backend: &Backend) -> Result<Vec<usize>> {
    backend.try_map(xs, |x| classify(forest, x).map(|c| c.label))
}

/// Discrete per-agent vectors for every frame after the first shared one.
/// Returns the first frame index and `frames[t][agent]`.
pub fn agent_symbols(trajs: &[AgentTrajectory], spec: &DiscretizerSpec) -> Result<(usize, Vec<Vec<Vec<usize>>>)> {
    let (first, last) = crate::discretize::common_range(trajs)?;
    let frames = (first + 1..=last)
        .map(|t| {
            agent_features(trajs, t)?
                .iter()
                .map(|f| spec.discretize(f))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((first + 1, frames))
}
