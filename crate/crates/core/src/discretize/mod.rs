//! Continuous features to discrete symbols.
//!
//! Each feature has its own rule: cut points (symbol = number of cuts
//! at or below the value) or a trained SVM. Per-feature symbols are fused
//! into one joint symbol by mixed-radix encoding, feature 0 most significant.

mod features;
mod io;

pub(crate) use features::common_range;
pub use features::{agent_features, observe, role_spec, team_features, team_spec, AGENT_SCHEMA, TEAM_SCHEMA};
pub use io::{load_spec, parse_spec, save_spec, write_spec};

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::svm::{svm_predict, SvmModel};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
    schema: Vec<String>,
}

impl FeatureVector {
    pub fn new(schema: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if schema.len() != values.len() {
            return Err(Error::FeatureLength {
                expected: schema.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("feature `{}` is not finite", schema[i])));
        }
        Ok(FeatureVector { values, schema })
    }

    pub fn from_static(schema: &[&str], values: Vec<f64>) -> Result<Self> {
        FeatureVector::new(schema.iter().map(|s| s.to_string()).collect(), values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.schema.iter().position(|s| s == name).map(|i| self.values[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureRule {
    Threshold {
        cuts: Vec<f64>,
    },
    /// Classifies the whole feature vector; one symbol per SVM class.
    Svm {
        path: PathBuf,
        model: SvmModel,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpec {
    pub name: String,
    pub rule: FeatureRule,
    pub symbols: Vec<String>,
}

impl FeatureSpec {
    pub fn threshold(name: &str, cuts: &[f64], symbols: &[&str]) -> Result<Self> {
        let f = FeatureSpec {
            name: name.to_string(),
            rule: FeatureRule::Threshold { cuts: cuts.to_vec() },
            symbols: symbols.iter().map(|s| s.to_string()).collect(),
        };
        f.validate()?;
        Ok(f)
    }

    pub fn radix(&self) -> usize {
        self.symbols.len()
    }

    fn validate(&self) -> Result<()> {
        let bad = |r: &str| Err(Error::config(format!("discretizer.{}", self.name), r));
        if self.symbols.len() < 2 {
            return bad("at least 2 symbols required");
        }
        match &self.rule {
            FeatureRule::Threshold { cuts } => {
                if cuts.iter().any(|c| !c.is_finite()) {
                    return bad("cut points must be finite");
                }
                if cuts.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("cut points must be strictly increasing");
                }
                if cuts.len() + 1 != self.symbols.len() {
                    return bad("need exactly one more symbol than cut points");
                }
            }
            FeatureRule::Svm { model, .. } => {
                if model.n_classes() != self.symbols.len() {
                    return bad("svm class count must equal the symbol count");
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizerSpec {
    features: Vec<FeatureSpec>,
}

impl DiscretizerSpec {
    pub fn new(features: Vec<FeatureSpec>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::config("discretizer", "no features"));
        }
        for (i, f) in features.iter().enumerate() {
            f.validate()?;
            if features[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::config("discretizer", format!("duplicate feature `{}`", f.name)));
            }
            if let FeatureRule::Svm { model, .. } = &f.rule {
                if model.feature_len != features.len() {
                    return Err(Error::config(
                        format!("discretizer.{}", f.name),
                        "svm feature length must equal the schema length",
                    ));
                }
            }
        }
        Ok(DiscretizerSpec { features })
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    pub fn radices(&self) -> Vec<usize> {
        self.features.iter().map(FeatureSpec::radix).collect()
    }

    /// Joint alphabet size M.
    pub fn alphabet_size(&self) -> usize {
        self.radices().iter().product()
    }

    /// Per-feature symbol indices.
    pub fn discretize(&self, f: &FeatureVector) -> Result<Vec<usize>> {
        let names = self.names();
        if f.schema().len() != names.len() || f.schema().iter().zip(&names).any(|(a, b)| a != b) {
            return Err(Error::DimensionMismatch {
                expected: names.join(","),
                found: f.schema().join(","),
            });
        }
        self.features
            .iter()
            .zip(f.values())
            .map(|(spec, &v)| match &spec.rule {
                FeatureRule::Threshold { cuts } => Ok(cuts.iter().filter(|&&c| c <= v).count()),
                FeatureRule::Svm { model, .. } => Ok(svm_predict(model, f.values())?.label),
            })
            .collect()
    }

    pub fn encode_joint(&self, symbols: &[usize]) -> Result<usize> {
        encode_joint(symbols, &self.radices())
    }

    pub fn decode_joint(&self, code: usize) -> Result<Vec<usize>> {
        decode_joint(code, &self.radices())
    }

    pub fn symbol(&self, f: &FeatureVector) -> Result<usize> {
        self.encode_joint(&self.discretize(f)?)
    }
}

/// Mixed-radix encoding, first symbol most significant.
pub fn encode_joint(symbols: &[usize], radices: &[usize]) -> Result<usize> {
    if symbols.len() != radices.len() {
        return Err(Error::FeatureLength {
            expected: radices.len(),
            got: symbols.len(),
        });
    }
    let mut code = 0usize;
    for (&s, &r) in symbols.iter().zip(radices) {
        if s >= r {
            return Err(Error::SymbolOutOfRange { symbol: s, alphabet: r });
        }
        code = code * r + s;
    }
    Ok(code)
}

pub fn decode_joint(code: usize, radices: &[usize]) -> Result<Vec<usize>> {
    let m: usize = radices.iter().product();
    if code >= m {
        return Err(Error::SymbolOutOfRange {
            symbol: code,
            alphabet: m,
        });
    }
    let mut out = vec![0; radices.len()];
    let mut rest = code;
    for (o, &r) in out.iter_mut().zip(radices).rev() {
        *o = rest % r;
        rest /= r;
    }
    Ok(out)
}

/// Discrete symbols of one team over a frame range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationSequence {
    symbols: Vec<usize>,
    m: usize,
    pub team_id: String,
    /// Inclusive frame range the symbols were computed over.
    pub frames: (usize, usize),
}

impl ObservationSequence {
    pub fn new(symbols: Vec<usize>, m: usize) -> Result<Self> {
        let n = symbols.len();
        ObservationSequence::with_source(symbols, m, String::new(), (0, n.saturating_sub(1)))
    }

    pub fn with_source(symbols: Vec<usize>, m: usize, team_id: String, frames: (usize, usize)) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::Invalid("observation sequence is empty".into()));
        }
        if let Some(&s) = symbols.iter().find(|&&s| s >= m) {
            return Err(Error::SymbolOutOfRange { symbol: s, alphabet: m });
        }
        Ok(ObservationSequence {
            symbols,
            m,
            team_id,
            frames,
        })
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn alphabet(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn below_and_at_cut() {
        let spec =
            DiscretizerSpec::new(vec![FeatureSpec::threshold("speed", &[1.0], &["slow", "fast"]).unwrap()]).unwrap();
        let f = |v| FeatureVector::from_static(&["speed"], vec![v]).unwrap();
        assert_eq!(spec.discretize(&f(0.4)).unwrap(), vec![0]);
        assert_eq!(spec.discretize(&f(1.0)).unwrap(), vec![1]);
    }

    #[test]
    fn schema_mismatch() {
        let spec = DiscretizerSpec::new(vec![FeatureSpec::threshold("speed", &[1.0], &["a", "b"]).unwrap()]).unwrap();
        let f = FeatureVector::from_static(&["cohesion"], vec![0.0]).unwrap();
        assert!(spec.discretize(&f).is_err());
    }

    #[test]
    fn rule_validation() {
        assert!(FeatureSpec::threshold("x", &[2.0, 1.0], &["a", "b", "c"]).is_err());
        assert!(FeatureSpec::threshold("x", &[], &["a"]).is_err());
        assert!(FeatureSpec::threshold("x", &[1.0], &["a", "b", "c"]).is_err());
    }

    #[test]
    fn mixed_radix() {
        assert_eq!(encode_joint(&[0, 0], &[2, 2]).unwrap(), 0);
        assert_eq!(encode_joint(&[1, 1], &[2, 2]).unwrap(), 3);
        assert!(encode_joint(&[2, 0], &[2, 2]).is_err());
        let radices = [2, 3, 2];
        let mut seen = Vec::new();
        for a in 0..2 {
            for b in 0..3 {
                for c in 0..2 {
                    let code = encode_joint(&[a, b, c], &radices).unwrap();
                    assert_eq!(decode_joint(code, &radices).unwrap(), vec![a, b, c]);
                    seen.push(code);
                }
            }
        }
        seen.sort();
        assert_eq!(seen, (0..12).collect::<Vec<_>>());
    }

    #[test]
    fn observation_bounds() {
        assert!(ObservationSequence::new(vec![0, 3], 3).is_err());
        assert!(ObservationSequence::new(vec![], 3).is_err());
        assert_eq!(ObservationSequence::new(vec![0, 2], 3).unwrap().len(), 2);
    }

    proptest! {
        #[test]
        fn threshold_is_monotone(
            mut cuts in proptest::collection::btree_set(-1000i32..1000, 1..6),
            a in -1200.0f64..1200.0,
            b in -1200.0f64..1200.0,
        ) {
            let cuts: Vec<f64> = std::mem::take(&mut cuts).into_iter().map(|c| c as f64 / 10.0).collect();
            let names: Vec<String> = (0..=cuts.len()).map(|i| format!("s{i}")).collect();
            let names: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
            let spec = DiscretizerSpec::new(vec![FeatureSpec::threshold("v", &cuts, &names).unwrap()]).unwrap();
            let f = |v| FeatureVector::from_static(&["v"], vec![v]).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let s_lo = spec.discretize(&f(lo)).unwrap()[0];
            let s_hi = spec.discretize(&f(hi)).unwrap()[0];
            prop_assert!(s_lo <= s_hi);
            // linear-scan oracle
            let mut oracle = 0;
            for &c in &cuts {
                if c <= hi {
                    oracle += 1;
                }
            }
            prop_assert_eq!(s_hi, oracle);
        }
    }
}
