//! Discrete hidden Markov models: scaled forward/backward, log-space
//! Viterbi, multi-sequence Baum-Welch and a bank of per-action models scored
//! by maximum likelihood.

mod algo;
mod io;
mod train;

pub use algo::{backward, forward, forward_blocked, viterbi, Forward, ViterbiPath};
pub use io::{load_bank, load_hmm, parse_hmm, save_bank, save_hmm, write_hmm};
pub use train::{baum_welch, baum_welch_on, train_bank, Training};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discretize::ObservationSequence;
use crate::error::{Error, Result};
use crate::runtime::Backend;

/// Tolerance for row sums of stochastic vectors.
pub const STOCHASTIC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct HmmModel {
    action: String,
    pi: Vec<f64>,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
}

fn check_row(row: &[f64], what: &str) -> Result<()> {
    if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidModel(format!(
            "{what} has a negative or non-finite entry"
        )));
    }
    let s: f64 = row.iter().sum();
    if (s - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::InvalidModel(format!("{what} sums to {s}, not 1")));
    }
    Ok(())
}

impl HmmModel {
    pub fn new(action: &str, pi: Vec<f64>, a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> Result<Self> {
        let n = pi.len();
        if n == 0 {
            return Err(Error::InvalidModel("no states".into()));
        }
        if action.is_empty() || action.contains(char::is_whitespace) {
            return Err(Error::InvalidModel(format!("bad action name `{action}`")));
        }
        if a.len() != n || a.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidModel(
                "transition matrix must be n_states x n_states".into(),
            ));
        }
        let m = b.first().map_or(0, Vec::len);
        if m == 0 || b.len() != n || b.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidModel(
                "emission matrix must be n_states x m_symbols".into(),
            ));
        }
        check_row(&pi, "pi")?;
        for (i, r) in a.iter().enumerate() {
            check_row(r, &format!("a row {i}"))?;
        }
        for (i, r) in b.iter().enumerate() {
            check_row(r, &format!("b row {i}"))?;
        }
        Ok(HmmModel {
            action: action.to_string(),
            pi,
            a,
            b,
        })
    }

    /// Uniform pi, random row-stochastic a and b.
    pub fn random(action: &str, n_states: usize, m_symbols: usize, seed: u64) -> Result<Self> {
        if n_states == 0 || m_symbols == 0 {
            return Err(Error::InvalidModel("n_states and m_symbols must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut row = |len: usize| -> Vec<f64> {
            let v: Vec<f64> = (0..len).map(|_| rng.random_range(0.05..1.0)).collect();
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect()
        };
        let a = (0..n_states).map(|_| row(n_states)).collect();
        let b = (0..n_states).map(|_| row(m_symbols)).collect();
        HmmModel::new(action, vec![1.0 / n_states as f64; n_states], a, b)
    }

    pub fn action(&self) -> &str {
        &self.action
    }

    pub fn set_action(&mut self, action: &str) {
        self.action = action.to_string();
    }

    pub fn n_states(&self) -> usize {
        self.pi.len()
    }

    pub fn m_symbols(&self) -> usize {
        self.b[0].len()
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn a(&self) -> &[Vec<f64>] {
        &self.a
    }

    pub fn b(&self) -> &[Vec<f64>] {
        &self.b
    }

    /// Re-checks every stochasticity invariant.
    pub fn validate(&self) -> Result<()> {
        HmmModel::new(&self.action, self.pi.clone(), self.a.clone(), self.b.clone()).map(|_| ())
    }

    pub(crate) fn check_obs(&self, obs: &[usize]) -> Result<()> {
        if obs.is_empty() {
            return Err(Error::Invalid("observation sequence is empty".into()));
        }
        match obs.iter().find(|&&o| o >= self.m_symbols()) {
            Some(&o) => Err(Error::SymbolOutOfRange {
                symbol: o,
                alphabet: self.m_symbols(),
            }),
            None => Ok(()),
        }
    }

    /// Samples a state path and observation sequence of length `t`.
    pub fn sample(&self, t: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |p: &[f64]| -> usize {
            let r: f64 = rng.random();
            let mut acc = 0.0;
            for (i, &v) in p.iter().enumerate() {
                acc += v;
                if r < acc {
                    return i;
                }
            }
            p.len() - 1
        };
        let mut states: Vec<usize> = Vec::with_capacity(t);
        let mut obs = Vec::with_capacity(t);
        for step in 0..t {
            let s = if step == 0 {
                draw(self.pi.as_slice())
            } else {
                draw(self.a[states[step - 1]].as_slice())
            };
            states.push(s);
            obs.push(draw(self.b[s].as_slice()));
        }
        (states, obs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HmmConfig {
    pub n_states: usize,
    pub m_symbols: usize,
    pub block_size: usize,
    pub max_iters: usize,
    pub ll_tol: f64,
    pub floor: f64,
    pub seed: u64,
}

impl HmmConfig {
    pub fn new(m_symbols: usize) -> Self {
        HmmConfig {
            n_states: 5,
            m_symbols,
            block_size: 16,
            max_iters: 100,
            ll_tol: 1e-6,
            floor: 1e-9,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 {
            return Err(Error::config("hmm.n_states", "must be >= 1"));
        }
        if self.m_symbols == 0 {
            return Err(Error::config("hmm.m_symbols", "must be >= 1"));
        }
        if self.block_size == 0 {
            return Err(Error::config("hmm.block_size", "must be >= 1"));
        }
        if !(self.floor > 0.0 && self.floor * (self.m_symbols.max(self.n_states) as f64) < 1.0) {
            return Err(Error::config(
                "hmm.floor",
                "must be > 0 and small enough to renormalize",
            ));
        }
        if !(self.ll_tol >= 0.0) {
            return Err(Error::config("hmm.ll_tol", "must be >= 0"));
        }
        Ok(())
    }
}

/// One model per action over a shared alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionBank {
    models: Vec<HmmModel>,
}

impl ActionBank {
    pub fn new(models: Vec<HmmModel>) -> Result<Self> {
        if let Some(first) = models.first() {
            let m = first.m_symbols();
            if let Some(bad) = models.iter().find(|x| x.m_symbols() != m) {
                return Err(Error::InvalidModel(format!(
                    "model `{}` has {} symbols, bank uses {m}",
                    bad.action(),
                    bad.m_symbols()
                )));
            }
        }
        for (i, x) in models.iter().enumerate() {
            if models[..i].iter().any(|y| y.action() == x.action()) {
                return Err(Error::InvalidModel(format!("duplicate action `{}`", x.action())));
            }
        }
        Ok(ActionBank { models })
    }

    pub fn models(&self) -> &[HmmModel] {
        &self.models
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn m_symbols(&self) -> Option<usize> {
        self.models.first().map(HmmModel::m_symbols)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recognition {
    pub label: String,
    /// Forward log-likelihood per model, in bank order.
    pub scores: Vec<(String, f64)>,
}

/// Scores `obs` against every model and returns the most likely action.
/// Ties go to the lexicographically smallest action name.
pub fn recognize(bank: &ActionBank, obs: &ObservationSequence, backend: &Backend) -> Result<Recognition> {
    if bank.is_empty() {
        return Err(Error::InvalidModel("action bank is empty".into()));
    }
    let lls = backend.try_map(bank.models(), |m| forward(m, obs.symbols()).map(|f| f.log_likelihood))?;
    let mut best: Option<usize> = None;
    for (i, &ll) in lls.iter().enumerate() {
        best = match best {
            None => Some(i),
            Some(b) => {
                let better = ll > lls[b] || (ll == lls[b] && bank.models[i].action() < bank.models[b].action());
                Some(if better { i } else { b })
            }
        };
    }
    let best = best.expect("non-empty bank");
    Ok(Recognition {
        label: bank.models[best].action().to_string(),
        scores: bank
            .models
            .iter()
            .zip(lls)
            .map(|(m, ll)| (m.action().to_string(), ll))
            .collect(),
    })
}
