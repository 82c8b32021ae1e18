//! Small helpers shared by the text model formats.

use crate::error::{Error, Result};

/// 17 significant digits: enough to round-trip any f64.
pub(crate) fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Line cursor over a text model file. Blank lines are skipped.
pub(crate) struct Lines<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Lines {
            lines: text
                .lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.trim()))
                .filter(|(_, l)| !l.is_empty())
                .collect(),
            pos: 0,
        }
    }

    fn line_no(&self) -> usize {
        self.lines
            .get(self.pos.min(self.lines.len().saturating_sub(1)))
            .map(|l| l.0)
            .unwrap_or(0)
    }

    pub(crate) fn error(&self, reason: &str) -> Error {
        Error::parse(self.line_no(), reason)
    }

    pub(crate) fn next_line(&mut self) -> Result<&'a str> {
        let l = self
            .lines
            .get(self.pos)
            .map(|l| l.1)
            .ok_or_else(|| Error::parse(self.line_no(), "unexpected end of file"))?;
        self.pos += 1;
        Ok(l)
    }

    pub(crate) fn peek_key(&self) -> Option<&'a str> {
        self.lines.get(self.pos).and_then(|l| l.1.split_whitespace().next())
    }

    pub(crate) fn expect_exact(&mut self, s: &str) -> Result<()> {
        let l = self.next_line()?;
        if l != s {
            self.pos -= 1;
            return Err(self.error(&format!("expected `{s}`")));
        }
        Ok(())
    }

    /// Consumes a line starting with `key` and returns the remaining fields.
    pub(crate) fn keyed(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let l = self.next_line()?;
        let mut it = l.split_whitespace();
        if it.next() != Some(key) {
            self.pos -= 1;
            return Err(self.error(&format!("expected `{key}`")));
        }
        Ok(it.collect())
    }

    pub(crate) fn single_real(&mut self, key: &str) -> Result<f64> {
        let f = self.keyed(key)?;
        match f.as_slice() {
            [v] => self.real(v),
            _ => Err(self.error(&format!("`{key}` takes one value"))),
        }
    }

    pub(crate) fn single_usize(&mut self, key: &str) -> Result<usize> {
        let f = self.keyed(key)?;
        match f.as_slice() {
            [v] => self.usize(v),
            _ => Err(self.error(&format!("`{key}` takes one value"))),
        }
    }

    pub(crate) fn single_str(&mut self, key: &str) -> Result<&'a str> {
        let f = self.keyed(key)?;
        match f.as_slice() {
            [v] => Ok(v),
            _ => Err(self.error(&format!("`{key}` takes one value"))),
        }
    }

    pub(crate) fn reals(&mut self, key: &str, n: usize) -> Result<Vec<f64>> {
        let f = self.keyed(key)?;
        if f.len() != n {
            return Err(self.error(&format!("`{key}` expects {n} values, got {}", f.len())));
        }
        f.iter().map(|t| self.real(t)).collect()
    }

    pub(crate) fn real(&self, tok: &str) -> Result<f64> {
        tok.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.error(&format!("bad real `{tok}`")))
    }

    pub(crate) fn usize(&self, tok: &str) -> Result<usize> {
        tok.parse::<usize>()
            .map_err(|_| self.error(&format!("bad integer `{tok}`")))
    }

    pub(crate) fn expect_end(&self) -> Result<()> {
        if self.pos < self.lines.len() {
            return Err(Error::parse(self.lines[self.pos].0, "trailing content"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_formatting_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 123456789.12345679, 0.0] {
            let s = fmt_real(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            assert_eq!(fmt_real(s.parse().unwrap()), s);
        }
    }
}
