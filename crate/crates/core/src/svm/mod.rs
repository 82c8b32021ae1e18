//! Soft-margin SVM classification, one-vs-rest over `n_classes`.

mod io;
pub mod smo;

pub use io::{load_model, parse_model, save_model, write_model};
pub use smo::{dual_objective, max_kkt_violation, BinaryTraining};

use crate::error::{Error, Result};
use crate::runtime::Backend;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    /// Kernel value; sums run in ascending component order.
    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => a.iter().zip(b).fold(0.0, |s, (x, y)| s + x * y),
            Kernel::Rbf { gamma } => {
                let d2 = a.iter().zip(b).fold(0.0, |s, (x, y)| s + (x - y) * (x - y));
                (-gamma * d2).exp()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmConfig {
    pub feature_len: usize,
    pub n_classes: usize,
    pub kernel: Kernel,
    pub c: f64,
    pub tol: f64,
    pub max_passes: usize,
}

impl SvmConfig {
    pub fn new(feature_len: usize, n_classes: usize) -> Self {
        SvmConfig {
            feature_len,
            n_classes,
            kernel: Kernel::Linear,
            c: 1.0,
            tol: 1e-3,
            max_passes: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_len == 0 {
            return Err(Error::config("svm.feature_len", "must be >= 1"));
        }
        if self.n_classes < 2 {
            return Err(Error::config("svm.n_classes", "must be >= 2"));
        }
        if let Kernel::Rbf { gamma } = self.kernel {
            if !(gamma > 0.0 && gamma.is_finite()) {
                return Err(Error::config("svm.gamma", "must be > 0"));
            }
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::config("svm.c", "must be > 0"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::config("svm.tol", "must be > 0"));
        }
        if self.max_passes == 0 {
            return Err(Error::config("svm.max_passes", "must be >= 1"));
        }
        Ok(())
    }
}

/// One binary sub-model: `f(x) = sum_i coef_i K(sv_i, x) - rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySvm {
    pub support: Vec<Vec<f64>>,
    /// `alpha_i * y_i` per support vector.
    pub coef: Vec<f64>,
    pub rho: f64,
}

impl BinarySvm {
    pub fn decision(&self, kernel: &Kernel, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (sv, c) in self.support.iter().zip(&self.coef) {
            s += c * kernel.eval(sv, x);
        }
        s - self.rho
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub c: f64,
    pub feature_len: usize,
    /// Sub-model `k` separates class `k` (positive) from all others.
    pub submodels: Vec<BinarySvm>,
}

impl SvmModel {
    pub fn n_classes(&self) -> usize {
        self.submodels.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: usize,
    pub decision_values: Vec<f64>,
}

fn check_training_set(x: &[Vec<f64>], y: &[usize], cfg: &SvmConfig) -> Result<()> {
    cfg.validate()?;
    if x.len() != y.len() {
        return Err(Error::TrainingData(format!(
            "{} vectors but {} labels",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::TrainingData("need at least 2 examples".into()));
    }
    for v in x {
        if v.len() != cfg.feature_len {
            return Err(Error::FeatureLength {
                expected: cfg.feature_len,
                got: v.len(),
            });
        }
        if v.iter().any(|f| !f.is_finite()) {
            return Err(Error::TrainingData("non-finite feature value".into()));
        }
    }
    let mut counts = vec![0usize; cfg.n_classes];
    for &l in y {
        if l >= cfg.n_classes {
            return Err(Error::TrainingData(format!("label {l} >= n_classes")));
        }
        counts[l] += 1;
    }
    if let Some(k) = counts.iter().position(|&c| c == 0) {
        return Err(Error::TrainingData(format!("class {k} has no examples")));
    }
    Ok(())
}

/// Trains the one-vs-rest sub-model of `class`, exposing solver details.
pub fn train_binary(x: &[Vec<f64>], y: &[usize], class: usize, cfg: &SvmConfig) -> BinaryTraining {
    let yy: Vec<f64> = y.iter().map(|&l| if l == class { 1.0 } else { -1.0 }).collect();
    smo::solve(
        x,
        &yy,
        cfg.kernel,
        cfg.c,
        cfg.tol,
        cfg.max_passes.saturating_mul(x.len()),
    )
}

pub fn svm_train(x: &[Vec<f64>], y: &[usize], cfg: &SvmConfig) -> Result<SvmModel> {
    svm_train_on(x, y, cfg, &Backend::Sequential)
}

/// Trains all sub-models; each is single-threaded and they run as
/// independent tasks on the backend.
pub fn svm_train_on(x: &[Vec<f64>], y: &[usize], cfg: &SvmConfig, backend: &Backend) -> Result<SvmModel> {
    check_training_set(x, y, cfg)?;
    let submodels = backend.map_range(cfg.n_classes, |k| train_binary(x, y, k, cfg).model);
    Ok(SvmModel {
        kernel: cfg.kernel,
        c: cfg.c,
        feature_len: cfg.feature_len,
        submodels,
    })
}

pub fn svm_predict(model: &SvmModel, x: &[f64]) -> Result<Prediction> {
    if x.len() != model.feature_len {
        return Err(Error::FeatureLength {
            expected: model.feature_len,
            got: x.len(),
        });
    }
    let decision_values: Vec<f64> = model.submodels.iter().map(|m| m.decision(&model.kernel, x)).collect();
    let mut label = 0;
    for k in 1..decision_values.len() {
        if decision_values[k] > decision_values[label] {
            label = k;
        }
    }
    Ok(Prediction { label, decision_values })
}

pub fn svm_decision_batch(model: &SvmModel, xs: &[Vec<f64>], backend: &Backend) -> Result<Vec<usize>> {
    backend.try_map(xs, |x| svm_predict(model, x).map(|p| p.label))
}
