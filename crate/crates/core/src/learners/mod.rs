//! Base learners: weighted fit plus probabilistic predict.
//!
//! Every learner turns an [`Example`] (text, hashed features and an optional
//! chain of earlier rounds' predictions) into a [`PredictionResult`]. Sample
//! weights enter either directly (fractional counts, loss weights) or by
//! fitting on a count-materialized corpus with uniform weights.

mod features;
mod logistic;
mod naive_bayes;
mod stump;

pub use features::{
    hash_token, tokenize, ChainLayout, FeatureMode, Featurizer, FeaturizerConfig, SparseVector,
};
pub use logistic::{LogisticParams, LogisticRegression};
pub use naive_bayes::{NaiveBayes, NaiveBayesParams};
pub use stump::{DecisionStump, StumpRule};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::ChainContext;
use crate::error::{Error, Result};
use crate::llm::{RemoteLearner, RemoteLearnerSettings};

/// Class probabilities plus their argmax (lowest index wins ties).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionResult {
    pub label: usize,
    pub scores: Vec<f64>,
}

impl PredictionResult {
    /// Normalizes nonnegative scores; an all-zero vector becomes uniform.
    pub fn from_scores(mut scores: Vec<f64>) -> Self {
        assert!(!scores.is_empty(), "prediction over zero classes");
        let total: f64 = scores.iter().sum();
        if total > 0.0 && total.is_finite() {
            for s in &mut scores {
                *s /= total;
            }
        } else {
            let u = 1.0 / scores.len() as f64;
            scores.iter_mut().for_each(|s| *s = u);
        }
        let label = argmax(&scores);
        Self { label, scores }
    }

    /// Softmax of unnormalized log-scores.
    pub fn from_log_scores(log_scores: &[f64]) -> Self {
        let max = log_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps = log_scores.iter().map(|&s| (s - max).exp()).collect();
        let mut result = Self::from_scores(exps);
        // Keep the argmax of the raw log-scores; exp can flatten near-ties.
        result.label = argmax(log_scores);
        result
    }

    pub fn one_hot(label: usize, n_classes: usize) -> Self {
        let mut scores = vec![0.0; n_classes];
        scores[label] = 1.0;
        Self { label, scores }
    }

    pub fn uniform(n_classes: usize) -> Self {
        Self::from_scores(vec![1.0; n_classes])
    }
}

/// Index of the maximum, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// One input to a learner.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub text: &'a str,
    pub features: &'a SparseVector,
    pub chain: Option<&'a ChainContext>,
}

/// Predictions over a batch, plus how many completions could not be parsed
/// (always zero for local learners).
#[derive(Debug, Clone, PartialEq)]
pub struct BatchPrediction {
    pub predictions: Vec<PredictionResult>,
    pub unparsable: usize,
}

pub trait BaseLearner: Send + Sync {
    fn predict(&self, example: &Example<'_>) -> Result<PredictionResult>;

    /// Order-preserving batch prediction; runs in parallel by default.
    fn predict_batch(&self, examples: &[Example<'_>]) -> Result<BatchPrediction> {
        let predictions = examples
            .par_iter()
            .map(|e| self.predict(e))
            .collect::<Result<Vec<_>>>()?;
        Ok(BatchPrediction {
            predictions,
            unparsable: 0,
        })
    }

    /// Whether predictions depend on the chain context.
    fn uses_chain(&self) -> bool;
}

/// Training view: examples, their labels and the feature geometry.
#[derive(Debug, Clone)]
pub struct TrainingData<'a> {
    pub examples: Vec<Example<'a>>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    pub base_dimension: usize,
}

impl<'a> TrainingData<'a> {
    pub fn new(
        examples: Vec<Example<'a>>,
        labels: Vec<usize>,
        n_classes: usize,
        base_dimension: usize,
    ) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if examples.len() != labels.len() {
            return Err(Error::LengthMismatch {
                expected: examples.len(),
                actual: labels.len(),
            });
        }
        if n_classes < 2 {
            return Err(Error::TooFewClasses { found: n_classes });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::InvalidArgument(format!("label {bad} out of range")));
        }
        Ok(Self {
            examples,
            labels,
            n_classes,
            base_dimension,
        })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// True when any example carries a nonempty chain.
    pub fn has_chain(&self) -> bool {
        self.examples
            .iter()
            .any(|e| e.chain.is_some_and(|c| !c.is_empty()))
    }

    pub(crate) fn layout(&self) -> Option<ChainLayout> {
        self.has_chain().then_some(ChainLayout {
            base_dimension: self.base_dimension,
            n_classes: self.n_classes,
        })
    }

    pub(crate) fn check_weights(&self, weights: &[f64]) -> Result<()> {
        if weights.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                actual: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidWeights(
                "weights must be finite and nonnegative".into(),
            ));
        }
        if weights.iter().all(|&w| w == 0.0) {
            return Err(Error::InvalidWeights("all weights are zero".into()));
        }
        Ok(())
    }
}

/// Featurized input for feature-space learners, with chain slots applied
/// when the learner was trained with them.
pub(crate) fn input_vector(layout: Option<&ChainLayout>, example: &Example<'_>) -> SparseVector {
    match layout {
        Some(layout) => layout.apply(example.features, example.chain),
        None => example.features.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    NaiveBayes,
    Logistic,
    Stump,
    RemoteLlm,
}

/// Which learner to fit each round, with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerConfig {
    NaiveBayes(NaiveBayesParams),
    Logistic(LogisticParams),
    Stump,
    RemoteLlm(RemoteLearnerSettings),
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig::NaiveBayes(NaiveBayesParams::default())
    }
}

impl LearnerConfig {
    pub fn kind(&self) -> LearnerKind {
        match self {
            LearnerConfig::NaiveBayes(_) => LearnerKind::NaiveBayes,
            LearnerConfig::Logistic(_) => LearnerKind::Logistic,
            LearnerConfig::Stump => LearnerKind::Stump,
            LearnerConfig::RemoteLlm(_) => LearnerKind::RemoteLlm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LearnerConfig::NaiveBayes(p) => p.validate(),
            LearnerConfig::Logistic(p) => p.validate(),
            LearnerConfig::Stump => Ok(()),
            LearnerConfig::RemoteLlm(s) => s.validate(),
        }
    }

    /// Fit on `data` under nonnegative per-example `weights`.
    /// `label_names` is only consulted by the remote learner.
    pub fn fit(
        &self,
        data: &TrainingData<'_>,
        weights: &[f64],
        label_names: &[String],
        seed: u64,
    ) -> Result<Learner> {
        Ok(match self {
            LearnerConfig::NaiveBayes(p) => Learner::NaiveBayes(NaiveBayes::fit(data, weights, p)?),
            LearnerConfig::Logistic(p) => {
                Learner::Logistic(LogisticRegression::fit(data, weights, p, seed)?)
            }
            LearnerConfig::Stump => Learner::Stump(DecisionStump::fit(data, weights)?),
            LearnerConfig::RemoteLlm(s) => {
                Learner::Remote(RemoteLearner::fit(s, data, weights, label_names, seed)?)
            }
        })
    }
}

/// A trained base learner of any built-in kind.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Learner {
    NaiveBayes(NaiveBayes),
    Logistic(LogisticRegression),
    Stump(DecisionStump),
    #[serde(rename = "remote_llm")]
    Remote(RemoteLearner),
}

impl Learner {
    pub fn kind(&self) -> LearnerKind {
        match self {
            Learner::NaiveBayes(_) => LearnerKind::NaiveBayes,
            Learner::Logistic(_) => LearnerKind::Logistic,
            Learner::Stump(_) => LearnerKind::Stump,
            Learner::Remote(_) => LearnerKind::RemoteLlm,
        }
    }

    fn inner(&self) -> &dyn BaseLearner {
        match self {
            Learner::NaiveBayes(m) => m,
            Learner::Logistic(m) => m,
            Learner::Stump(m) => m,
            Learner::Remote(m) => m,
        }
    }
}

impl BaseLearner for Learner {
    fn predict(&self, example: &Example<'_>) -> Result<PredictionResult> {
        self.inner().predict(example)
    }

    fn predict_batch(&self, examples: &[Example<'_>]) -> Result<BatchPrediction> {
        self.inner().predict_batch(examples)
    }

    fn uses_chain(&self) -> bool {
        self.inner().uses_chain()
    }
}
