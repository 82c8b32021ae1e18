//! Binary soft-margin SVM dual solver (SMO with maximal-violating-pair
//! selection). Solves
//!
//! ```text
//! min  1/2 a'Qa - e'a   s.t.  0 <= a_i <= C,  y'a = 0,   Q_ij = y_i y_j K(x_i, x_j)
//! ```
//!
//! Pair selection scans indices in ascending order and keeps the first
//! maximum, so training is deterministic.

use super::{BinarySvm, Kernel};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct BinaryTraining {
    pub model: BinarySvm,
    /// Dual variables for every training example, in input order.
    pub alpha: Vec<f64>,
    pub iterations: usize,
    /// Final maximal violation `m(a) - M(a)`.
    pub gap: f64,
    pub converged: bool,
}

pub fn solve(x: &[Vec<f64>], y: &[f64], kernel: Kernel, c: f64, tol: f64, max_iter: usize) -> BinaryTraining {
    let n = x.len();
    let k: Vec<f64> = {
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = kernel.eval(&x[i], &x[j]);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        k
    };
    let q = |i: usize, j: usize| y[i] * y[j] * k[i * n + j];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let is_upper = |a: f64| a >= c;
    let is_lower = |a: f64| a <= 0.0;

    let mut iterations = 0;
    let mut gap;
    loop {
        // i: argmax over I_up of -y G, j: argmax over I_low of y G
        let mut gmax = f64::NEG_INFINITY;
        let mut gmax2 = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        let mut j_sel = usize::MAX;
        for t in 0..n {
            let in_up = if y[t] > 0.0 {
                !is_upper(alpha[t])
            } else {
                !is_lower(alpha[t])
            };
            let in_low = if y[t] > 0.0 {
                !is_lower(alpha[t])
            } else {
                !is_upper(alpha[t])
            };
            if in_up && -y[t] * grad[t] > gmax {
                gmax = -y[t] * grad[t];
                i_sel = t;
            }
            if in_low && y[t] * grad[t] > gmax2 {
                gmax2 = y[t] * grad[t];
                j_sel = t;
            }
        }
        gap = gmax + gmax2;
        if i_sel == usize::MAX || j_sel == usize::MAX || gap <= tol {
            break;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;
        let (i, j) = (i_sel, j_sel);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    }

    let rho = compute_rho(&alpha, &grad, y, c);
    let mut support = Vec::new();
    let mut coef = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support.push(x[t].clone());
            coef.push(alpha[t] * y[t]);
        }
    }
    BinaryTraining {
        model: BinarySvm { support, coef, rho },
        alpha,
        iterations,
        gap,
        converged: gap <= tol,
    }
}

fn compute_rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else if ub.is_finite() {
        ub
    } else if lb.is_finite() {
        lb
    } else {
        0.0
    }
}

/// Largest soft-margin KKT violation over a training set, given each
/// example's dual variable and decision value.
pub fn max_kkt_violation(alpha: &[f64], decision: &[f64], y: &[f64], c: f64) -> f64 {
    alpha
        .iter()
        .zip(decision)
        .zip(y)
        .map(|((&a, &f), &yy)| {
            let m = yy * f - 1.0;
            if a <= 0.0 {
                (-m).max(0.0)
            } else if a >= c {
                m.max(0.0)
            } else {
                m.abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Dual objective `sum a - 1/2 a'Qa` (to be maximized).
pub fn dual_objective(x: &[Vec<f64>], y: &[f64], alpha: &[f64], kernel: Kernel) -> f64 {
    let n = x.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            if alpha[j] == 0.0 {
                continue;
            }
            quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel.eval(&x[i], &x[j]);
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}
