use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    argmax, input_vector, BaseLearner, ChainLayout, Example, PredictionResult, TrainingData,
};
use crate::error::Result;

/// `feature != 0` routes to the present leaf, otherwise the absent leaf.
/// `feature = None` is the constant rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StumpRule {
    pub feature: Option<u32>,
    /// Normalized class mass on each side, used as prediction scores.
    pub present_scores: Vec<f64>,
    pub absent_scores: Vec<f64>,
}

/// One-feature presence rule chosen by exhaustive search over every feature
/// that occurs in the training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionStump {
    n_classes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    chain: Option<ChainLayout>,
    rule: StumpRule,
    training_error: f64,
}

fn leaf_error(mass: &[f64]) -> f64 {
    let total: f64 = mass.iter().sum();
    total - mass[argmax(mass)]
}

fn normalize(mass: &[f64]) -> Vec<f64> {
    PredictionResult::from_scores(mass.to_vec()).scores
}

impl DecisionStump {
    pub fn fit(data: &TrainingData<'_>, weights: &[f64]) -> Result<Self> {
        data.check_weights(weights)?;
        let c = data.n_classes;
        let chain = data.layout();
        let total: f64 = weights.iter().sum();

        let mut class_mass = vec![0.0; c];
        let mut present: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
        for ((example, &label), &w) in data.examples.iter().zip(&data.labels).zip(weights) {
            let w = w / total;
            class_mass[label] += w;
            for (f, _) in input_vector(chain.as_ref(), example).iter() {
                present.entry(f).or_insert_with(|| vec![0.0; c])[label] += w;
            }
        }

        let mut best_error = leaf_error(&class_mass);
        let mut best = StumpRule {
            feature: None,
            present_scores: normalize(&class_mass),
            absent_scores: normalize(&class_mass),
        };
        // Ascending feature order: strict improvement keeps the lowest index on ties.
        for (&f, p) in &present {
            let absent: Vec<f64> = class_mass
                .iter()
                .zip(p)
                .map(|(m, x)| (m - x).max(0.0))
                .collect();
            let error = leaf_error(p) + leaf_error(&absent);
            if error < best_error - 1e-12 {
                best_error = error;
                best = StumpRule {
                    feature: Some(f),
                    present_scores: normalize(p),
                    absent_scores: normalize(&absent),
                };
            }
        }
        Ok(Self {
            n_classes: c,
            chain,
            rule: best,
            training_error: best_error.max(0.0),
        })
    }

    pub fn rule(&self) -> &StumpRule {
        &self.rule
    }

    /// Weighted training error of the chosen rule (weights normalized).
    pub fn training_error(&self) -> f64 {
        self.training_error
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }
}

impl BaseLearner for DecisionStump {
    fn predict(&self, example: &Example<'_>) -> Result<PredictionResult> {
        let scores = match self.rule.feature {
            Some(f) if input_vector(self.chain.as_ref(), example).get(f) != 0.0 => {
                &self.rule.present_scores
            }
            _ => &self.rule.absent_scores,
        };
        Ok(PredictionResult::from_scores(scores.clone()))
    }

    fn uses_chain(&self) -> bool {
        self.chain.is_some()
    }
}
