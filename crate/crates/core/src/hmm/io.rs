//! `hmm v1` model files and bank directories (one `<action>.hmm` per model).

use std::fs;
use std::path::Path;

use super::{ActionBank, HmmModel};
use crate::error::{Error, Result};
use crate::util::{fmt_real, Lines};

fn row(out: &mut String, key: &str, v: &[f64]) {
    out.push_str(key);
    for x in v {
        out.push(' ');
        out.push_str(&fmt_real(*x));
    }
    out.push('\n');
}

pub fn write_hmm(model: &HmmModel) -> String {
    let mut out = String::from("hmm v1\n");
    out.push_str(&format!("action {}\n", model.action()));
    out.push_str(&format!("n_states {}\n", model.n_states()));
    out.push_str(&format!("m_symbols {}\n", model.m_symbols()));
    row(&mut out, "pi", model.pi());
    for r in model.a() {
        row(&mut out, "a", r);
    }
    for r in model.b() {
        row(&mut out, "b", r);
    }
    out
}

pub fn parse_hmm(text: &str) -> Result<HmmModel> {
    let mut lines = Lines::new(text);
    lines.expect_exact("hmm v1")?;
    let action = lines.single_str("action")?.to_string();
    let n = lines.single_usize("n_states")?;
    let m = lines.single_usize("m_symbols")?;
    let pi = lines.reals("pi", n)?;
    let a = (0..n).map(|_| lines.reals("a", n)).collect::<Result<Vec<_>>>()?;
    let b = (0..n).map(|_| lines.reals("b", m)).collect::<Result<Vec<_>>>()?;
    lines.expect_end()?;
    HmmModel::new(&action, pi, a, b)
}

pub fn save_hmm(path: &Path, model: &HmmModel) -> Result<()> {
    fs::write(path, write_hmm(model)).map_err(|e| Error::io(path, e))
}

pub fn load_hmm(path: &Path) -> Result<HmmModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_hmm(&text).map_err(|e| match e {
        Error::Parse { line, reason } => Error::Decode {
            path: path.to_path_buf(),
            reason: format!("line {line}: {reason}"),
        },
        other => other,
    })
}

pub fn save_bank(dir: &Path, bank: &ActionBank) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for m in bank.models() {
        save_hmm(&dir.join(format!("{}.hmm", m.action())), m)?;
    }
    Ok(())
}

/// Loads every `.hmm` file in `dir`, ordered by file name.
pub fn load_bank(dir: &Path) -> Result<ActionBank> {
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        if p.extension().and_then(|e| e.to_str()) == Some("hmm") {
            paths.push(p);
        }
    }
    paths.sort();
    ActionBank::new(paths.iter().map(|p| load_hmm(p)).collect::<Result<_>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn save_load_save_is_byte_identical() {
        let m = HmmModel::random("Wedge", 4, 6, 12).unwrap();
        let text = write_hmm(&m);
        let back = parse_hmm(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(write_hmm(&back), text);
    }

    #[test]
    fn bank_directory() {
        let dir = tempfile::tempdir().unwrap();
        let bank = ActionBank::new(vec![
            HmmModel::random("b", 2, 3, 0).unwrap(),
            HmmModel::random("a", 2, 3, 1).unwrap(),
        ])
        .unwrap();
        save_bank(dir.path(), &bank).unwrap();
        let back = load_bank(dir.path()).unwrap();
        assert_eq!(back.models()[0].action(), "a");
        assert_eq!(back.models()[1], bank.models()[0]);
    }

    #[test]
    fn rejects_short_rows() {
        let m = HmmModel::random("x", 2, 3, 0).unwrap();
        let text = write_hmm(&m).replacen("m_symbols 3", "m_symbols 4", 1);
        assert!(parse_hmm(&text).is_err());
    }
}
