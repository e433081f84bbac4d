use serde::{Deserialize, Serialize};

use super::{input_vector, BaseLearner, ChainLayout, Example, PredictionResult, TrainingData};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NaiveBayesParams {
    /// Additive (Lidstone) smoothing, > 0.
    pub smoothing: f64,
}

impl Default for NaiveBayesParams {
    fn default() -> Self {
        Self { smoothing: 1.0 }
    }
}

impl NaiveBayesParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.smoothing > 0.0 && self.smoothing.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "naive Bayes smoothing must be > 0, got {}",
                self.smoothing
            )));
        }
        Ok(())
    }
}

/// Multinomial naive Bayes over weight-scaled feature counts.
///
/// Weights act as fractional document counts. They are rescaled to sum to
/// the number of examples, so any positive rescaling of the weight vector
/// yields the same model. Signed hashed values enter by magnitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    n_classes: usize,
    dimension: usize,
    smoothing: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    chain: Option<ChainLayout>,
    class_log_prior: Vec<f64>,
    class_totals: Vec<f64>,
    /// Per class, sorted `(feature, weighted count)` pairs.
    feature_counts: Vec<Vec<(u32, f64)>>,
}

impl NaiveBayes {
    pub fn fit(
        data: &TrainingData<'_>,
        weights: &[f64],
        params: &NaiveBayesParams,
    ) -> Result<Self> {
        params.validate()?;
        data.check_weights(weights)?;
        let c = data.n_classes;
        let chain = data.layout();
        let dimension = chain.map_or(data.base_dimension, |l| l.total_dimension());

        let total: f64 = weights.iter().sum();
        let scale = data.len() as f64 / total;

        let mut class_mass = vec![0.0; c];
        let mut counts: Vec<std::collections::BTreeMap<u32, f64>> = vec![Default::default(); c];
        for ((example, &label), &w) in data.examples.iter().zip(&data.labels).zip(weights) {
            let w = w * scale;
            if w == 0.0 {
                continue;
            }
            class_mass[label] += w;
            let x = input_vector(chain.as_ref(), example);
            let table = &mut counts[label];
            for (i, v) in x.iter() {
                *table.entry(i).or_default() += w * v.abs();
            }
        }
        if let Some(class) = class_mass.iter().position(|&m| m <= 0.0) {
            return Err(Error::ZeroClassWeight { class });
        }
        let mass: f64 = class_mass.iter().sum();
        let class_log_prior = class_mass.iter().map(|m| (m / mass).ln()).collect();
        let class_totals = counts.iter().map(|t| t.values().sum()).collect();
        let feature_counts = counts
            .into_iter()
            .map(|t| t.into_iter().collect())
            .collect();
        Ok(Self {
            n_classes: c,
            dimension,
            smoothing: params.smoothing,
            chain,
            class_log_prior,
            class_totals,
            feature_counts,
        })
    }

    pub fn class_log_prior(&self) -> &[f64] {
        &self.class_log_prior
    }

    /// Per-class joint log-likelihood (up to a shared constant).
    pub fn log_scores(&self, example: &Example<'_>) -> Vec<f64> {
        let x = input_vector(self.chain.as_ref(), example);
        let v = self.dimension as f64;
        (0..self.n_classes)
            .map(|class| {
                let counts = &self.feature_counts[class];
                let denom = (self.class_totals[class] + self.smoothing * v).ln();
                let mut score = self.class_log_prior[class];
                for (i, value) in x.iter() {
                    let n = counts
                        .binary_search_by_key(&i, |&(j, _)| j)
                        .map(|p| counts[p].1)
                        .unwrap_or(0.0);
                    score += value.abs() * ((n + self.smoothing).ln() - denom);
                }
                score
            })
            .collect()
    }
}

impl BaseLearner for NaiveBayes {
    fn predict(&self, example: &Example<'_>) -> Result<PredictionResult> {
        Ok(PredictionResult::from_log_scores(&self.log_scores(example)))
    }

    fn uses_chain(&self) -> bool {
        self.chain.is_some()
    }
}
