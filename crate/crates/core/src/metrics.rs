//! Accuracy, macro-F1 and confusion matrices.
//!
//! Confusion matrices are indexed `[predicted][truth]`: columns are the true
//! labels, rows the predictions, and normalization is per truth column.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_samples: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
    /// Class names in index order, when known.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
    pub confusion: ConfusionMatrix,
}

/// Counts plus their per-truth-column normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// `counts[predicted][truth]`.
    pub counts: Vec<Vec<u64>>,
    /// Each nonempty column sums to one; empty columns are all zeros.
    pub normalized: Vec<Vec<f64>>,
    /// Truth classes with no samples.
    pub empty_columns: Vec<usize>,
}

fn check(predictions: &[usize], truths: &[usize]) -> Result<()> {
    if predictions.len() != truths.len() {
        return Err(Error::LengthMismatch {
            expected: truths.len(),
            actual: predictions.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::InvalidArgument("metrics over zero samples".into()));
    }
    Ok(())
}

fn check_range(predictions: &[usize], truths: &[usize], c: usize) -> Result<()> {
    if let Some(&bad) = predictions.iter().chain(truths).find(|&&l| l >= c) {
        return Err(Error::InvalidArgument(format!(
            "label {bad} out of range for {c} classes"
        )));
    }
    Ok(())
}

/// Fraction of exact matches.
pub fn accuracy(predictions: &[usize], truths: &[usize]) -> Result<f64> {
    check(predictions, truths)?;
    let hits = predictions
        .iter()
        .zip(truths)
        .filter(|(p, t)| p == t)
        .count();
    Ok(hits as f64 / truths.len() as f64)
}

/// Per-class F1; a class never predicted and never true scores 0.
pub fn per_class_f1(predictions: &[usize], truths: &[usize], c: usize) -> Result<Vec<f64>> {
    check(predictions, truths)?;
    check_range(predictions, truths, c)?;
    let mut tp = vec![0u64; c];
    let mut predicted = vec![0u64; c];
    let mut actual = vec![0u64; c];
    for (&p, &t) in predictions.iter().zip(truths) {
        predicted[p] += 1;
        actual[t] += 1;
        if p == t {
            tp[p] += 1;
        }
    }
    Ok((0..c)
        .map(|k| {
            let denom = predicted[k] + actual[k];
            if denom == 0 {
                0.0
            } else {
                2.0 * tp[k] as f64 / denom as f64
            }
        })
        .collect())
}

/// Unweighted mean of per-class F1 over all `c` classes.
pub fn macro_f1(predictions: &[usize], truths: &[usize], c: usize) -> Result<f64> {
    let f1 = per_class_f1(predictions, truths, c)?;
    Ok(f1.iter().sum::<f64>() / c as f64)
}

pub fn confusion(predictions: &[usize], truths: &[usize], c: usize) -> Result<ConfusionMatrix> {
    if predictions.len() != truths.len() {
        return Err(Error::LengthMismatch {
            expected: truths.len(),
            actual: predictions.len(),
        });
    }
    check_range(predictions, truths, c)?;
    let mut counts = vec![vec![0u64; c]; c];
    for (&p, &t) in predictions.iter().zip(truths) {
        counts[p][t] += 1;
    }
    let mut normalized = vec![vec![0.0; c]; c];
    let mut empty_columns = Vec::new();
    for t in 0..c {
        let column: u64 = (0..c).map(|p| counts[p][t]).sum();
        if column == 0 {
            empty_columns.push(t);
            continue;
        }
        for p in 0..c {
            normalized[p][t] = counts[p][t] as f64 / column as f64;
        }
    }
    Ok(ConfusionMatrix {
        counts,
        normalized,
        empty_columns,
    })
}

/// All metrics at once.
pub fn report(predictions: &[usize], truths: &[usize], labels: &[String]) -> Result<MetricsReport> {
    let c = labels.len();
    Ok(MetricsReport {
        n_samples: truths.len(),
        accuracy: accuracy(predictions, truths)?,
        macro_f1: macro_f1(predictions, truths, c)?,
        labels: labels.to_vec(),
        confusion: confusion(predictions, truths, c)?,
    })
}

impl MetricsReport {
    /// Writes `<stem>.json`, `<stem>_confusion.csv` and
    /// `<stem>_confusion_normalized.csv` under `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json_path = dir.join(format!("{stem}.json"));
        let json = serde_json::to_string_pretty(self)?;
        fs::write(&json_path, json + "\n").map_err(|e| Error::io(&json_path, e))?;

        let counts: Vec<Vec<String>> = self
            .confusion
            .counts
            .iter()
            .map(|row| row.iter().map(u64::to_string).collect())
            .collect();
        self.write_matrix(&dir.join(format!("{stem}_confusion.csv")), &counts)?;
        let normalized: Vec<Vec<String>> = self
            .confusion
            .normalized
            .iter()
            .map(|row| row.iter().map(|x| format!("{x:.6}")).collect())
            .collect();
        self.write_matrix(
            &dir.join(format!("{stem}_confusion_normalized.csv")),
            &normalized,
        )
    }

    fn write_matrix(&self, path: &Path, rows: &[Vec<String>]) -> Result<()> {
        let names: Vec<String> = if self.labels.is_empty() {
            (0..rows.len()).map(|i| i.to_string()).collect()
        } else {
            self.labels.clone()
        };
        let mut out = String::from("predicted\\truth");
        for n in &names {
            out.push(',');
            out.push_str(&csv_field(n));
        }
        out.push('\n');
        for (name, row) in names.iter().zip(rows) {
            out.push_str(&csv_field(name));
            for cell in row {
                out.push(',');
                out.push_str(cell);
            }
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
