//! Multi-sequence Baum-Welch with probability flooring.

use super::{algo, ActionBank, HmmConfig, HmmModel};
use crate::discretize::ObservationSequence;
use crate::error::{Error, Result};
use crate::runtime::Backend;

#[derive(Debug, Clone, PartialEq)]
pub struct Training {
    pub model: HmmModel,
    /// Total log-likelihood of every evaluated model, starting with the
    /// initial one.
    pub trace: Vec<f64>,
    /// M-steps taken.
    pub iterations: usize,
    pub converged: bool,
}

/// Expected counts of one sequence.
struct Stats {
    ll: f64,
    pi: Vec<f64>,
    a_num: Vec<Vec<f64>>,
    a_den: Vec<f64>,
    b_num: Vec<Vec<f64>>,
    b_den: Vec<f64>,
}

impl Stats {
    fn zero(n: usize, m: usize) -> Self {
        Stats {
            ll: 0.0,
            pi: vec![0.0; n],
            a_num: vec![vec![0.0; n]; n],
            a_den: vec![0.0; n],
            b_num: vec![vec![0.0; m]; n],
            b_den: vec![0.0; n],
        }
    }

    fn add(&mut self, o: &Stats) {
        self.ll += o.ll;
        let add = |x: &mut [f64], y: &[f64]| x.iter_mut().zip(y).for_each(|(a, b)| *a += b);
        add(&mut self.pi, &o.pi);
        add(&mut self.a_den, &o.a_den);
        add(&mut self.b_den, &o.b_den);
        for (x, y) in self.a_num.iter_mut().zip(&o.a_num) {
            add(x, y);
        }
        for (x, y) in self.b_num.iter_mut().zip(&o.b_num) {
            add(x, y);
        }
    }
}

fn e_step(model: &HmmModel, obs: &[usize]) -> Result<Stats> {
    let (n, m) = (model.n_states(), model.m_symbols());
    let f = algo::forward(model, obs)?;
    if f.log_likelihood == f64::NEG_INFINITY {
        return Err(Error::TrainingData(format!(
            "a sequence has zero likelihood under model `{}`",
            model.action()
        )));
    }
    let beta = algo::backward(model, obs, &f.scale)?;
    let (a, b) = (model.a(), model.b());
    let mut s = Stats::zero(n, m);
    s.ll = f.log_likelihood;
    let t_len = obs.len();
    for t in 0..t_len {
        for i in 0..n {
            let g = f.alpha[t][i] * beta[t][i];
            if t == 0 {
                s.pi[i] = g;
            }
            s.b_num[i][obs[t]] += g;
            s.b_den[i] += g;
            if t + 1 < t_len {
                s.a_den[i] += g;
                let o = obs[t + 1];
                let c = f.scale[t + 1];
                for j in 0..n {
                    s.a_num[i][j] += f.alpha[t][i] * a[i][j] * b[j][o] * beta[t + 1][j] / c;
                }
            }
        }
    }
    Ok(s)
}

fn floor_row(row: &mut [f64], floor: f64) {
    for v in row.iter_mut() {
        *v = v.max(floor);
    }
    let s: f64 = row.iter().sum();
    for v in row.iter_mut() {
        *v /= s;
    }
}

fn m_step(model: &HmmModel, s: &Stats, n_seqs: usize, floor: f64) -> Result<HmmModel> {
    let n = model.n_states();
    let mut pi: Vec<f64> = s.pi.iter().map(|v| v / n_seqs as f64).collect();
    floor_row(&mut pi, floor);
    let mut a = model.a().to_vec();
    let mut b = model.b().to_vec();
    for i in 0..n {
        if s.a_den[i] > 0.0 {
            for j in 0..n {
                a[i][j] = s.a_num[i][j] / s.a_den[i];
            }
        }
        floor_row(&mut a[i], floor);
        if s.b_den[i] > 0.0 {
            for (k, v) in b[i].iter_mut().enumerate() {
                *v = s.b_num[i][k] / s.b_den[i];
            }
        }
        floor_row(&mut b[i], floor);
    }
    HmmModel::new(model.action(), pi, a, b)
}

fn total_stats(model: &HmmModel, seqs: &[ObservationSequence], cfg: &HmmConfig, backend: &Backend) -> Result<Stats> {
    let chunks: Vec<&[ObservationSequence]> = seqs.chunks(cfg.block_size).collect();
    let per_chunk = backend.try_map(&chunks, |chunk| {
        chunk
            .iter()
            .map(|o| e_step(model, o.symbols()))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut total = Stats::zero(model.n_states(), model.m_symbols());
    for s in per_chunk.iter().flatten() {
        total.add(s);
    }
    Ok(total)
}

pub fn baum_welch(init: &HmmModel, seqs: &[ObservationSequence], cfg: &HmmConfig) -> Result<Training> {
    baum_welch_on(init, seqs, cfg, &Backend::Sequential)
}

/// Re-estimates `init` on `seqs` until the relative log-likelihood gain
/// drops below `cfg.ll_tol` or `cfg.max_iters` M-steps have run.
pub fn baum_welch_on(
    init: &HmmModel,
    seqs: &[ObservationSequence],
    cfg: &HmmConfig,
    backend: &Backend,
) -> Result<Training> {
    cfg.validate()?;
    init.validate()?;
    if seqs.is_empty() {
        return Err(Error::TrainingData("no training sequences".into()));
    }
    for s in seqs {
        init.check_obs(s.symbols())?;
    }
    let mut model = init.clone();
    let mut stats = total_stats(&model, seqs, cfg, backend)?;
    let mut trace = vec![stats.ll];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iters {
        let next = m_step(&model, &stats, seqs.len(), cfg.floor)?;
        let next_stats = total_stats(&next, seqs, cfg, backend)?;
        iterations += 1;
        let (prev, ll) = (stats.ll, next_stats.ll);
        trace.push(ll);
        model = next;
        stats = next_stats;
        let rel = if prev != 0.0 { (ll - prev) / prev.abs() } else { 0.0 };
        if rel < cfg.ll_tol {
            converged = true;
            break;
        }
    }
    Ok(Training {
        model,
        trace,
        iterations,
        converged,
    })
}

/// Trains one model per action, in parallel across actions. Model `k`
/// starts from `HmmModel::random` seeded with `cfg.seed + k`.
pub fn train_bank(
    data: &[(String, Vec<ObservationSequence>)],
    cfg: &HmmConfig,
    backend: &Backend,
) -> Result<(ActionBank, Vec<Training>)> {
    cfg.validate()?;
    let indexed: Vec<(usize, &(String, Vec<ObservationSequence>))> = data.iter().enumerate().collect();
    let runs = backend.try_map(&indexed, |(k, (action, seqs))| {
        let init = HmmModel::random(action, cfg.n_states, cfg.m_symbols, cfg.seed.wrapping_add(*k as u64))?;
        baum_welch_on(&init, seqs, cfg, backend)
    })?;
    let bank = ActionBank::new(runs.iter().map(|r| r.model.clone()).collect())?;
    Ok((bank, runs))
}
