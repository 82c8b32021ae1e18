//! Sliding-window majority vote over per-frame role labels.

use std::collections::VecDeque;

use super::{classify, Forest};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct RoleStabilizer {
    window: usize,
    history: Vec<VecDeque<usize>>,
    current: Vec<Option<usize>>,
}

impl RoleStabilizer {
    pub fn new(window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::config("roles.window", "must be >= 1"));
        }
        Ok(RoleStabilizer {
            window,
            history: Vec::new(),
            current: Vec::new(),
        })
    }

    /// Feeds one frame of raw labels (one per agent) and returns the
    /// stabilized roles. The majority of the last `window` labels wins; on a
    /// tie the previous role is kept (the lowest tied label on the first
    /// frame).
    pub fn push(&mut self, labels: &[usize]) -> Vec<usize> {
        if self.history.len() < labels.len() {
            self.history.resize(labels.len(), VecDeque::new());
            self.current.resize(labels.len(), None);
        }
        labels
            .iter()
            .enumerate()
            .map(|(k, &l)| {
                let h = &mut self.history[k];
                h.push_back(l);
                if h.len() > self.window {
                    h.pop_front();
                }
                let role = majority(h, self.current[k]);
                self.current[k] = Some(role);
                role
            })
            .collect()
    }
}

fn majority(h: &VecDeque<usize>, previous: Option<usize>) -> usize {
    let max_label = h.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; max_label + 1];
    for &l in h {
        counts[l] += 1;
    }
    let top = counts.iter().copied().max().unwrap_or(0);
    let tied: Vec<usize> = (0..counts.len()).filter(|&c| counts[c] == top).collect();
    if tied.len() == 1 {
        return tied[0];
    }
    previous.unwrap_or(tied[0])
}

/// Classifies every agent in every frame, then stabilizes over `window`
/// frames. `frames[t][agent]` is a discrete feature vector.
pub fn assign_roles(frames: &[Vec<Vec<usize>>], model: &Forest, window: usize) -> Result<Vec<Vec<usize>>> {
    let mut stab = RoleStabilizer::new(window)?;
    frames
        .iter()
        .map(|agents| {
            let raw = agents
                .iter()
                .map(|x| classify(model, x).map(|c| c.label))
                .collect::<Result<Vec<_>>>()?;
            Ok(stab.push(&raw))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn window_one_is_identity() {
        let mut s = RoleStabilizer::new(1).unwrap();
        for l in [3, 1, 1, 0, 2] {
            assert_eq!(s.push(&[l]), vec![l]);
        }
    }

    #[test]
    fn majority_of_five() {
        let mut s = RoleStabilizer::new(5).unwrap();
        let out: Vec<usize> = [0, 0, 1, 0, 0].iter().map(|&l| s.push(&[l])[0]).collect();
        assert_eq!(out[4], 0);
    }

    #[test]
    fn tie_keeps_previous() {
        let mut s = RoleStabilizer::new(2).unwrap();
        assert_eq!(s.push(&[1]), vec![1]);
        assert_eq!(s.push(&[0]), vec![1]);
        assert_eq!(s.push(&[0]), vec![0]);
    }

    /// Direct recomputation from the full label stream.
    fn oracle(stream: &[usize], w: usize) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for t in 0..stream.len() {
            let lo = (t + 1).saturating_sub(w);
            let win = &stream[lo..=t];
            let mut best: Vec<usize> = Vec::new();
            let mut best_n = 0;
            for c in 0..4 {
                let n = win.iter().filter(|&&l| l == c).count();
                if n > best_n {
                    best_n = n;
                    best = vec![c];
                } else if n == best_n && n > 0 {
                    best.push(c);
                }
            }
            let pick = if best.len() == 1 || t == 0 { best[0] } else { out[t - 1] };
            out.push(pick);
        }
        out
    }

    proptest! {
        #[test]
        fn matches_window_oracle(stream in proptest::collection::vec(0usize..4, 1..60), w in 1usize..8) {
            let mut s = RoleStabilizer::new(w).unwrap();
            let got: Vec<usize> = stream.iter().map(|&l| s.push(&[l])[0]).collect();
            prop_assert_eq!(got, oracle(&stream, w));
        }
    }
}
