//! Per-round training record and its on-disk CSV form.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::WeightDistribution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTelemetry {
    pub round: usize,
    /// Weighted error before clamping.
    pub raw_epsilon: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub z: f64,
    /// Weighted cross-entropy of the round's scores on the training samples.
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub holdout_accuracy: Option<f64>,
    /// Completions that named no label (prompt learners only).
    pub unparsable: usize,
    /// Number of samples the learner was fitted on.
    pub fit_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum StopReason {
    MaxRounds,
    Rejected { round: usize, epsilon: f64 },
    EarlyStopped { round: usize },
}

/// Weights over the training samples after `round` updates.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSnapshot {
    pub round: usize,
    pub weights: Vec<f64>,
}

impl WeightSnapshot {
    pub fn new(round: usize, weights: &WeightDistribution<f64>) -> Self {
        Self {
            round,
            weights: weights.as_slice().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTelemetry {
    pub n_classes: usize,
    pub sample_ids: Vec<u64>,
    pub holdout_size: usize,
    pub rounds: Vec<RoundTelemetry>,
    pub snapshots: Vec<WeightSnapshot>,
    pub stop_reason: StopReason,
}

#[derive(Serialize, Deserialize)]
struct WeightRow {
    sample_id: u64,
    weight: f64,
    round: usize,
}

pub const TELEMETRY_FILE: &str = "telemetry.csv";
pub const WEIGHTS_DIR: &str = "weights";

impl TrainingTelemetry {
    pub fn new(n_classes: usize, sample_ids: Vec<u64>, holdout_size: usize) -> Self {
        Self {
            n_classes,
            sample_ids,
            holdout_size,
            rounds: Vec::new(),
            snapshots: Vec::new(),
            stop_reason: StopReason::MaxRounds,
        }
    }

    /// Writes `telemetry.csv` and `weights/round_NNN.csv` under `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let weights_dir = dir.join(WEIGHTS_DIR);
        fs::create_dir_all(&weights_dir).map_err(|e| Error::io(&weights_dir, e))?;

        let path = dir.join(TELEMETRY_FILE);
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
        for r in &self.rounds {
            w.serialize(r).map_err(|e| csv_err(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        for snap in &self.snapshots {
            if snap.weights.len() != self.sample_ids.len() {
                return Err(Error::LengthMismatch {
                    expected: self.sample_ids.len(),
                    actual: snap.weights.len(),
                });
            }
            let path = weights_dir.join(format!("round_{:03}.csv", snap.round));
            let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
            for (&sample_id, &weight) in self.sample_ids.iter().zip(&snap.weights) {
                w.serialize(WeightRow {
                    sample_id,
                    weight,
                    round: snap.round,
                })
                .map_err(|e| csv_err(&path, e))?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    /// Reads the per-round rows written by [`TrainingTelemetry::write`].
    pub fn read_rounds(dir: impl AsRef<Path>) -> Result<Vec<RoundTelemetry>> {
        let path = dir.as_ref().join(TELEMETRY_FILE);
        let mut r = csv::Reader::from_path(&path).map_err(|e| csv_err(&path, e))?;
        r.deserialize()
            .collect::<std::result::Result<Vec<RoundTelemetry>, _>>()
            .map_err(|e| csv_err(&path, e))
    }

    /// Reads one weight snapshot as `(sample_id, weight)` pairs.
    pub fn read_weights(dir: impl AsRef<Path>, round: usize) -> Result<Vec<(u64, f64)>> {
        let path = dir
            .as_ref()
            .join(WEIGHTS_DIR)
            .join(format!("round_{round:03}.csv"));
        let mut r = csv::Reader::from_path(&path).map_err(|e| csv_err(&path, e))?;
        let mut out = Vec::new();
        for row in r.deserialize::<WeightRow>() {
            let row = row.map_err(|e| csv_err(&path, e))?;
            out.push((row.sample_id, row.weight));
        }
        Ok(out)
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Format(format!("{}: {e}", path.display()))
}
