//! Predicted-vs-actual confusion matrix. Rows are predicted labels, columns
//! actual ones; precision is reported per row, recall per column.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    labels: Vec<String>,
    /// `counts[predicted][actual]`.
    counts: Vec<Vec<usize>>,
}

fn pct(v: Option<f64>) -> String {
    match v {
        Some(p) => format!("{:.1}%", p * 100.0),
        None => "n/a".to_string(),
    }
}

impl ConfusionMatrix {
    pub fn new<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        let labels: Vec<String> = labels.iter().map(|s| s.as_ref().to_string()).collect();
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::Invalid(format!("duplicate label `{l}`")));
            }
        }
        let n = labels.len();
        Ok(ConfusionMatrix {
            labels,
            counts: vec![vec![0; n]; n],
        })
    }

    /// Builds a matrix from `(predicted, actual)` pairs.
    pub fn evaluate<S: AsRef<str>>(labels: &[S], predictions: &[(String, String)]) -> Result<Self> {
        let mut m = ConfusionMatrix::new(labels)?;
        for (p, a) in predictions {
            m.add(p, a)?;
        }
        Ok(m)
    }

    fn index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn add(&mut self, predicted: &str, actual: &str) -> Result<()> {
        let (r, c) = (self.index(predicted)?, self.index(actual)?);
        self.counts[r][c] += 1;
        Ok(())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, r: usize) -> usize {
        self.counts[r].iter().sum()
    }

    pub fn col_sum(&self, c: usize) -> usize {
        self.counts.iter().map(|row| row[c]).sum()
    }

    /// `None` when nothing was predicted as this label.
    pub fn precision(&self, r: usize) -> Option<f64> {
        let s = self.row_sum(r);
        (s > 0).then(|| self.counts[r][r] as f64 / s as f64)
    }

    /// `None` when the label never occurs.
    pub fn recall(&self, c: usize) -> Option<f64> {
        let s = self.col_sum(c);
        (s > 0).then(|| self.counts[c][c] as f64 / s as f64)
    }

    /// Mean recall over labels that occur at least once.
    pub fn macro_recall(&self) -> Option<f64> {
        let r: Vec<f64> = (0..self.labels.len()).filter_map(|c| self.recall(c)).collect();
        (!r.is_empty()).then(|| r.iter().sum::<f64>() / r.len() as f64)
    }

    pub fn accuracy(&self) -> Option<f64> {
        let t = self.total();
        (t > 0).then(|| (0..self.labels.len()).map(|i| self.counts[i][i]).sum::<usize>() as f64 / t as f64)
    }

    /// Aligned text table with precision on the right and recall underneath.
    pub fn to_text(&self) -> String {
        let n = self.labels.len();
        let corner = "Predicted \\ Actual";
        let first = self
            .labels
            .iter()
            .map(String::len)
            .chain([corner.len(), "Recall".len()])
            .max()
            .unwrap_or(0);
        let widths: Vec<usize> = self.labels.iter().map(|l| l.len().max(6)).collect();
        let mut out = format!("{corner:<first$}");
        for (l, w) in self.labels.iter().zip(&widths) {
            out.push_str(&format!("  {l:>w$}"));
        }
        out.push_str("  Precision\n");
        for r in 0..n {
            out.push_str(&format!("{:<first$}", self.labels[r]));
            for (c, w) in widths.iter().enumerate() {
                out.push_str(&format!("  {:>w$}", self.counts[r][c]));
            }
            out.push_str(&format!("  {:>9}\n", pct(self.precision(r))));
        }
        out.push_str(&format!("{:<first$}", "Recall"));
        for (c, w) in widths.iter().enumerate() {
            out.push_str(&format!("  {:>w$}", pct(self.recall(c))));
        }
        out.push('\n');
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("predicted");
        for l in &self.labels {
            out.push(',');
            out.push_str(l);
        }
        out.push_str(",precision\n");
        for (r, row) in self.counts.iter().enumerate() {
            out.push_str(&self.labels[r]);
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push_str(&format!(",{}\n", pct(self.precision(r))));
        }
        out.push_str("recall");
        for c in 0..self.labels.len() {
            out.push_str(&format!(",{}", pct(self.recall(c))));
        }
        out.push_str(",\n");
        out
    }
}
