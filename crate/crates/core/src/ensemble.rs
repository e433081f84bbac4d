//! Inference over a trained ensemble.
//!
//! Recurrent mode runs the learners in round order; learner `k` sees the
//! sample plus the `(label, eps)` history of rounds `1..k`, and the last
//! learner's prediction is the answer. Weighted-vote mode lets every learner
//! predict without context and sums `alpha_k` per predicted class.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boosting::BoostConfig;
use crate::dataset::{ClassLabelMap, Corpus};
use crate::error::{Error, Result};
use crate::learners::{BaseLearner, Example, Featurizer, Learner, PredictionResult, SparseVector};
use crate::metrics::{self, MetricsReport};

pub const MODEL_FORMAT_TAG: &str = "chainboost-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainEntry {
    pub label: usize,
    pub epsilon: f64,
}

/// Predictions of earlier rounds, oldest first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainContext {
    history: Vec<ChainEntry>,
}

impl ChainContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(history: Vec<ChainEntry>) -> Self {
        Self { history }
    }

    pub fn push(&mut self, label: usize, epsilon: f64) {
        self.history.push(ChainEntry { label, epsilon });
    }

    pub fn entries(&self) -> &[ChainEntry] {
        &self.history
    }

    pub fn last(&self) -> Option<&ChainEntry> {
        self.history.last()
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }
}

/// One accepted boosting round.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoostRound {
    /// 1-based.
    pub round_index: usize,
    /// Clamped training error rate.
    pub epsilon: f64,
    pub alpha: f64,
    pub z: f64,
    pub learner: Learner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InferenceMode {
    Recurrent,
    WeightedVote,
}

impl std::str::FromStr for InferenceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "recurrent" => Ok(Self::Recurrent),
            "weighted_vote" | "weighted-vote" | "vote" => Ok(Self::WeightedVote),
            other => Err(Error::InvalidArgument(format!(
                "unknown inference mode {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for InferenceMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Recurrent => "recurrent",
            Self::WeightedVote => "weighted_vote",
        })
    }
}

/// Final prediction plus what each round predicted along the way.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsemblePrediction {
    pub result: PredictionResult,
    pub per_round_labels: Vec<usize>,
}

/// Run learners recurrently over a batch. `rounds` pairs each learner with
/// the training error rate recorded for its chain entries.
pub fn chain_predict(
    rounds: &[(&dyn BaseLearner, f64)],
    texts: &[&str],
    features: &[SparseVector],
) -> Result<Vec<EnsemblePrediction>> {
    if rounds.is_empty() {
        return Err(Error::DegenerateModel("model has no rounds".into()));
    }
    let n = texts.len();
    let mut chains = vec![ChainContext::new(); n];
    let mut per_round: Vec<Vec<usize>> = vec![Vec::with_capacity(rounds.len()); n];
    let mut last = Vec::new();
    for (learner, epsilon) in rounds {
        let examples: Vec<Example<'_>> = (0..n)
            .map(|i| Example {
                text: texts[i],
                features: &features[i],
                chain: Some(&chains[i]),
            })
            .collect();
        let batch = learner.predict_batch(&examples)?;
        drop(examples);
        for (i, p) in batch.predictions.iter().enumerate() {
            chains[i].push(p.label, *epsilon);
            per_round[i].push(p.label);
        }
        last = batch.predictions;
    }
    Ok(last
        .into_iter()
        .zip(per_round)
        .map(|(result, per_round_labels)| EnsemblePrediction {
            result,
            per_round_labels,
        })
        .collect())
}

/// Alpha-weighted vote over context-free predictions.
pub fn vote_predict(
    rounds: &[(&dyn BaseLearner, f64)],
    n_classes: usize,
    texts: &[&str],
    features: &[SparseVector],
) -> Result<Vec<EnsemblePrediction>> {
    if rounds.is_empty() {
        return Err(Error::DegenerateModel("model has no rounds".into()));
    }
    if rounds.iter().all(|(_, alpha)| *alpha <= 0.0) {
        return Err(Error::DegenerateModel("every round has alpha <= 0".into()));
    }
    let n = texts.len();
    let examples: Vec<Example<'_>> = (0..n)
        .map(|i| Example {
            text: texts[i],
            features: &features[i],
            chain: None,
        })
        .collect();
    let mut votes = vec![vec![0.0; n_classes]; n];
    let mut per_round: Vec<Vec<usize>> = vec![Vec::with_capacity(rounds.len()); n];
    for (learner, alpha) in rounds {
        let batch = learner.predict_batch(&examples)?;
        for (i, p) in batch.predictions.iter().enumerate() {
            votes[i][p.label] += alpha;
            per_round[i].push(p.label);
        }
    }
    Ok(votes
        .into_iter()
        .zip(per_round)
        .map(|(v, per_round_labels)| EnsemblePrediction {
            result: PredictionResult::from_scores(v.into_iter().map(|x| x.max(0.0)).collect()),
            per_round_labels,
        })
        .collect())
}

/// A trained ensemble: rounds, label map and featurizer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleModel {
    label_map: ClassLabelMap,
    featurizer: Featurizer,
    config: BoostConfig,
    rounds: Vec<BoostRound>,
}

#[derive(Serialize, Deserialize)]
struct ModelContainer {
    format: String,
    version: u32,
    #[serde(flatten)]
    model: EnsembleModel,
}

impl EnsembleModel {
    pub fn new(
        label_map: ClassLabelMap,
        featurizer: Featurizer,
        config: BoostConfig,
        rounds: Vec<BoostRound>,
    ) -> Result<Self> {
        if rounds.is_empty() {
            return Err(Error::DegenerateModel("model has no rounds".into()));
        }
        for (i, r) in rounds.iter().enumerate() {
            if r.round_index != i + 1 {
                return Err(Error::DegenerateModel(format!(
                    "round indices must run 1..K, found {} at position {i}",
                    r.round_index
                )));
            }
        }
        Ok(Self {
            label_map,
            featurizer,
            config,
            rounds,
        })
    }

    pub fn label_map(&self) -> &ClassLabelMap {
        &self.label_map
    }

    pub fn featurizer(&self) -> &Featurizer {
        &self.featurizer
    }

    pub fn config(&self) -> &BoostConfig {
        &self.config
    }

    pub fn rounds(&self) -> &[BoostRound] {
        &self.rounds
    }

    pub fn n_classes(&self) -> usize {
        self.label_map.len()
    }

    /// A model holding only the first `k` rounds.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        Self::new(
            self.label_map.clone(),
            self.featurizer.clone(),
            self.config.clone(),
            self.rounds.iter().take(k).cloned().collect(),
        )
    }

    fn chain_pairs(&self) -> Vec<(&dyn BaseLearner, f64)> {
        self.rounds
            .iter()
            .map(|r| (&r.learner as &dyn BaseLearner, r.epsilon))
            .collect()
    }

    fn vote_pairs(&self) -> Vec<(&dyn BaseLearner, f64)> {
        self.rounds
            .iter()
            .map(|r| (&r.learner as &dyn BaseLearner, r.alpha))
            .collect()
    }

    pub fn predict_batch(
        &self,
        texts: &[&str],
        mode: InferenceMode,
    ) -> Result<Vec<EnsemblePrediction>> {
        let features: Vec<SparseVector> =
            texts.iter().map(|t| self.featurizer.transform(t)).collect();
        match mode {
            InferenceMode::Recurrent => chain_predict(&self.chain_pairs(), texts, &features),
            InferenceMode::WeightedVote => {
                vote_predict(&self.vote_pairs(), self.n_classes(), texts, &features)
            }
        }
    }

    pub fn predict_recurrent(&self, text: &str) -> Result<PredictionResult> {
        Ok(self.predict_one(text, InferenceMode::Recurrent)?.result)
    }

    pub fn predict_weighted_vote(&self, text: &str) -> Result<PredictionResult> {
        Ok(self.predict_one(text, InferenceMode::WeightedVote)?.result)
    }

    pub fn predict_one(&self, text: &str, mode: InferenceMode) -> Result<EnsemblePrediction> {
        let mut out = self.predict_batch(&[text], mode)?;
        Ok(out.remove(0))
    }

    /// Accuracy, macro-F1 and confusion over `corpus`, whose labels are
    /// matched to this model by name.
    pub fn evaluate(&self, corpus: &Corpus, mode: InferenceMode) -> Result<MetricsReport> {
        let corpus = corpus.remap_to(&self.label_map)?;
        let texts = corpus.texts();
        let predicted: Vec<usize> = self
            .predict_batch(&texts, mode)?
            .into_iter()
            .map(|p| p.result.label)
            .collect();
        metrics::report(&predicted, &corpus.labels(), self.label_map.names())
    }

    pub fn to_json(&self) -> Result<String> {
        let container = ModelContainer {
            format: MODEL_FORMAT_TAG.into(),
            version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        };
        Ok(serde_json::to_string(&container)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let container: ModelContainer = serde_json::from_str(json)?;
        Self::from_container(container)
    }

    fn from_container(container: ModelContainer) -> Result<Self> {
        if container.format != MODEL_FORMAT_TAG {
            return Err(Error::IncompatibleModel(format!(
                "not a model file: {}",
                container.format
            )));
        }
        if container.version != MODEL_FORMAT_VERSION {
            return Err(Error::IncompatibleModel(format!(
                "unsupported model version {}",
                container.version
            )));
        }
        let m = container.model;
        Self::new(m.label_map, m.featurizer, m.config, m.rounds)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        w.write_all(self.to_json()?.as_bytes())
            .and_then(|_| w.write_all(b"\n"))
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let container: ModelContainer = serde_json::from_reader(BufReader::new(file))?;
        Self::from_container(container)
    }
}
