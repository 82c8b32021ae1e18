//! `discretizer v1` text format:
//!
//! ```text
//! discretizer v1
//! feature speed threshold 0.5 : slow fast
//! feature posture svm posture.svm : crouch stand
//! ```
//!
//! SVM model paths are resolved relative to the spec file's directory.

use std::fs;
use std::path::Path;

use super::{DiscretizerSpec, FeatureRule, FeatureSpec};
use crate::error::{Error, Result};
use crate::svm::load_model;
use crate::util::{fmt_real, Lines};

pub fn write_spec(spec: &DiscretizerSpec) -> String {
    let mut out = String::from("discretizer v1\n");
    for f in spec.features() {
        out.push_str("feature ");
        out.push_str(&f.name);
        match &f.rule {
            FeatureRule::Threshold { cuts } => {
                out.push_str(" threshold");
                for c in cuts {
                    out.push(' ');
                    out.push_str(&fmt_real(*c));
                }
            }
            FeatureRule::Svm { path, .. } => {
                out.push_str(" svm ");
                out.push_str(&path.display().to_string());
            }
        }
        out.push_str(" :");
        for s in &f.symbols {
            out.push(' ');
            out.push_str(s);
        }
        out.push('\n');
    }
    out
}

/// Parses a spec. `base` resolves SVM model paths; `None` rejects SVM rules.
pub fn parse_spec(text: &str, base: Option<&Path>) -> Result<DiscretizerSpec> {
    let mut lines = Lines::new(text);
    lines.expect_exact("discretizer v1")?;
    let mut features = Vec::new();
    while lines.peek_key().is_some() {
        let f = lines.keyed("feature")?;
        let colon = f
            .iter()
            .position(|&t| t == ":")
            .ok_or_else(|| lines.error("missing `:` before symbol names"))?;
        let (head, symbols) = (&f[..colon], &f[colon + 1..]);
        let rule = match head {
            [_, "threshold", cuts @ ..] => FeatureRule::Threshold {
                cuts: cuts.iter().map(|c| lines.real(c)).collect::<Result<_>>()?,
            },
            [_, "svm", path] => {
                let base = base.ok_or_else(|| lines.error("svm rules need a spec file location"))?;
                let full = base.join(path);
                FeatureRule::Svm {
                    path: path.into(),
                    model: load_model(&full)?,
                }
            }
            _ => return Err(lines.error("expected `feature NAME threshold CUTS... : SYMBOLS...`")),
        };
        features.push(FeatureSpec {
            name: head[0].to_string(),
            rule,
            symbols: symbols.iter().map(|s| s.to_string()).collect(),
        });
    }
    lines.expect_end()?;
    DiscretizerSpec::new(features)
}

pub fn save_spec(path: &Path, spec: &DiscretizerSpec) -> Result<()> {
    fs::write(path, write_spec(spec)).map_err(|e| Error::io(path, e))
}

pub fn load_spec(path: &Path) -> Result<DiscretizerSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_spec(&text, path.parent())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{team_spec, FeatureVector};
    use crate::svm::{save_model, svm_train, SvmConfig};

    #[test]
    fn threshold_round_trip() {
        let spec = team_spec();
        let text = write_spec(&spec);
        let back = parse_spec(&text, None).unwrap();
        assert_eq!(back, spec);
        assert_eq!(write_spec(&back), text);
    }

    #[test]
    fn svm_rule_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let x = vec![vec![0.0, 0.0], vec![0.2, 0.1], vec![5.0, 5.0], vec![5.2, 4.9]];
        let model = svm_train(&x, &[0, 0, 1, 1], &SvmConfig::new(2, 2)).unwrap();
        save_model(&dir.path().join("m.svm"), &model).unwrap();
        let text = "discretizer v1\nfeature a svm m.svm : low high\nfeature b threshold 10 : s t\n";
        std::fs::write(dir.path().join("d.txt"), text).unwrap();
        let spec = load_spec(&dir.path().join("d.txt")).unwrap();
        let f = FeatureVector::from_static(&["a", "b"], vec![5.1, 5.0]).unwrap();
        assert_eq!(spec.discretize(&f).unwrap(), vec![1, 0]);
        assert!(parse_spec(text, None).is_err());
    }

    #[test]
    fn rejects_bad_cuts() {
        assert!(parse_spec("discretizer v1\nfeature a threshold 2 1 : x y z\n", None).is_err());
        assert!(parse_spec("discretizer v1\nfeature a threshold 1 x y\n", None).is_err());
    }
}
