//! Forward, backward and Viterbi recursions. Every sum runs over ascending
//! state index, so results do not depend on tiling.

use super::HmmModel;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub log_likelihood: f64,
    /// Scaled lattice: each row sums to 1 (or is all zero after an
    /// impossible observation).
    pub alpha: Vec<Vec<f64>>,
    /// Per-step normalizers; `log_likelihood` is the sum of their logs.
    pub scale: Vec<f64>,
}

pub fn forward(model: &HmmModel, obs: &[usize]) -> Result<Forward> {
    forward_blocked(model, obs, model.n_states())
}

/// Forward pass computing target states in tiles of `block_size`.
pub fn forward_blocked(model: &HmmModel, obs: &[usize], block_size: usize) -> Result<Forward> {
    model.check_obs(obs)?;
    let n = model.n_states();
    let block = block_size.max(1);
    let (a, b) = (model.a(), model.b());
    let mut alpha = vec![vec![0.0; n]; obs.len()];
    let mut scale = vec![0.0; obs.len()];
    let mut ll = 0.0;
    for (t, &o) in obs.iter().enumerate() {
        for tile in (0..n).step_by(block) {
            for j in tile..(tile + block).min(n) {
                let prior = if t == 0 {
                    model.pi()[j]
                } else {
                    let prev = &alpha[t - 1];
                    let mut s = 0.0;
                    for i in 0..n {
                        s += prev[i] * a[i][j];
                    }
                    s
                };
                alpha[t][j] = prior * b[j][o];
            }
        }
        let c: f64 = alpha[t].iter().sum();
        scale[t] = c;
        if c <= 0.0 {
            ll = f64::NEG_INFINITY;
            break;
        }
        for v in &mut alpha[t] {
            *v /= c;
        }
        ll += c.ln();
    }
    Ok(Forward {
        log_likelihood: ll,
        alpha,
        scale,
    })
}

/// Backward lattice scaled with the forward normalizers, so that
/// `alpha[t][i] * beta[t][i]` is the state posterior.
pub fn backward(model: &HmmModel, obs: &[usize], scale: &[f64]) -> Result<Vec<Vec<f64>>> {
    model.check_obs(obs)?;
    let n = model.n_states();
    let (a, b) = (model.a(), model.b());
    let t_len = obs.len();
    let mut beta = vec![vec![0.0; n]; t_len];
    beta[t_len - 1].iter_mut().for_each(|v| *v = 1.0);
    for t in (0..t_len - 1).rev() {
        let o = obs[t + 1];
        let c = scale[t + 1];
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += a[i][j] * b[j][o] * beta[t + 1][j];
            }
            beta[t][i] = s / c;
        }
    }
    Ok(beta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViterbiPath {
    pub path: Vec<usize>,
    pub log_prob: f64,
}

/// Most likely state path. Ties go to the lower state index, both in the
/// recursion and at the final step.
pub fn viterbi(model: &HmmModel, obs: &[usize]) -> Result<ViterbiPath> {
    model.check_obs(obs)?;
    let n = model.n_states();
    let t_len = obs.len();
    let ln_a: Vec<Vec<f64>> = model.a().iter().map(|r| r.iter().map(|v| v.ln()).collect()).collect();
    let ln_b = |j: usize, o: usize| model.b()[j][o].ln();
    let mut delta: Vec<f64> = (0..n).map(|j| model.pi()[j].ln() + ln_b(j, obs[0])).collect();
    let mut back = vec![vec![0usize; n]; t_len];
    for t in 1..t_len {
        let mut next = vec![0.0; n];
        for j in 0..n {
            let mut best = (0, delta[0] + ln_a[0][j]);
            for i in 1..n {
                let v = delta[i] + ln_a[i][j];
                if v > best.1 {
                    best = (i, v);
                }
            }
            back[t][j] = best.0;
            next[j] = best.1 + ln_b(j, obs[t]);
        }
        delta = next;
    }
    let mut last = 0;
    for j in 1..n {
        if delta[j] > delta[last] {
            last = j;
        }
    }
    let mut path = vec![0; t_len];
    path[t_len - 1] = last;
    for t in (1..t_len).rev() {
        path[t - 1] = back[t][path[t]];
    }
    Ok(ViterbiPath {
        path,
        log_prob: delta[last],
    })
}
