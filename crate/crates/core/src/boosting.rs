//! The boosting training loop.
//!
//! Each round fits a learner on the current weight distribution (directly or
//! through a count-materialized corpus), measures its weighted error on the
//! original training samples, derives `alpha`, and re-weights. With
//! `chain_in_training`, round `k` learns from inputs that carry the
//! predictions of rounds `1..k`, matching what it will see at inference.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::augment::{materialize, Augmenter};
use crate::dataset::{stratified_split, Corpus};
use crate::ensemble::{BoostRound, ChainContext, EnsembleModel};
use crate::error::{Error, Result};
use crate::learners::{
    BaseLearner, Example, Featurizer, FeaturizerConfig, LearnerConfig, SparseVector, TrainingData,
};
use crate::seed::derive_seed;
use crate::telemetry::{RoundTelemetry, StopReason, TrainingTelemetry, WeightSnapshot};
use crate::weights::{
    alpha, clamp_epsilon, random_guess_error, update_weights, weighted_error, weights_to_counts,
    CountPolicy, WeightDistribution,
};

/// How the weight distribution reaches the learner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Weights passed to the learner as fractional counts / loss weights.
    Direct,
    /// Weights realized as capped copy counts; copies beyond the first are
    /// generated by the augmenter and the learner sees uniform weights.
    #[default]
    Materialize,
}

/// Exponent used in the weight update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateForm {
    /// `w * e^(+-alpha)`.
    #[default]
    Samme,
    /// `w * e^(+-alpha/2)`; for two classes `Z = 2 sqrt(eps (1 - eps))` and
    /// the product of normalizers bounds the weighted-vote training error.
    HalfAlpha,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoostConfig {
    pub k_max: usize,
    pub learner: LearnerConfig,
    pub chain_in_training: bool,
    pub weighting: Weighting,
    pub replication: f64,
    /// Per-sample copy cap, as a multiple of `replication`.
    pub count_cap: f64,
    /// 0 disables the holdout and early stopping.
    pub holdout_fraction: f64,
    pub patience: usize,
    pub seed: u64,
    pub update_form: UpdateForm,
    pub featurizer: FeaturizerConfig,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            k_max: 7,
            learner: LearnerConfig::default(),
            chain_in_training: true,
            weighting: Weighting::Materialize,
            replication: 1.0,
            count_cap: 10.0,
            holdout_fraction: 0.1,
            patience: 2,
            seed: 0,
            update_form: UpdateForm::Samme,
            featurizer: FeaturizerConfig::default(),
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_max == 0 {
            return Err(Error::InvalidArgument("k_max must be >= 1".into()));
        }
        if self.patience == 0 {
            return Err(Error::InvalidArgument("patience must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::InvalidArgument(format!(
                "holdout_fraction must lie in [0, 1), got {}",
                self.holdout_fraction
            )));
        }
        if !(self.replication >= 1.0 && self.replication.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "replication must be >= 1, got {}",
                self.replication
            )));
        }
        if !(self.count_cap >= 1.0 && self.count_cap.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "count_cap must be >= 1, got {}",
                self.count_cap
            )));
        }
        self.featurizer.validate()?;
        self.learner.validate()
    }

    fn count_policy(&self) -> CountPolicy {
        CountPolicy {
            replication: self.replication,
            cap_factor: self.count_cap,
        }
    }
}

/// Trained model together with the per-round record of how it got there.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: EnsembleModel,
    pub telemetry: TrainingTelemetry,
}

const SPLIT_STREAM: u64 = 0x5eed_0001;

fn examples<'a>(
    texts: &[&'a str],
    features: &'a [SparseVector],
    chains: Option<&'a [ChainContext]>,
) -> Vec<Example<'a>> {
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| Example {
            text: t,
            features: &features[i],
            chain: chains.map(|c| &c[i]),
        })
        .collect()
}

/// Run boosting on `corpus` (augmented samples in it are ignored).
pub fn train(
    corpus: &Corpus,
    config: &BoostConfig,
    augmenter: &dyn Augmenter,
) -> Result<TrainOutcome> {
    config.validate()?;
    let corpus = corpus.originals()?;
    let (train_set, holdout) = if config.holdout_fraction > 0.0 {
        let (t, h) = stratified_split(
            &corpus,
            config.holdout_fraction,
            derive_seed(config.seed, SPLIT_STREAM),
        )?;
        (t, Some(h))
    } else {
        (corpus, None)
    };
    let c = train_set.n_classes();
    let label_names = train_set.label_map().names().to_vec();
    let texts = train_set.texts();
    let labels = train_set.labels();
    let featurizer = Featurizer::fit(config.featurizer.clone(), texts.iter().copied())?;
    let features: Vec<SparseVector> = texts.iter().map(|t| featurizer.transform(t)).collect();
    let base_dim = featurizer.dimension();

    let holdout_texts: Vec<&str> = holdout.as_ref().map(|h| h.texts()).unwrap_or_default();
    let holdout_labels: Vec<usize> = holdout.as_ref().map(|h| h.labels()).unwrap_or_default();
    let holdout_features: Vec<SparseVector> = holdout_texts
        .iter()
        .map(|t| featurizer.transform(t))
        .collect();
    let mut holdout_chains = vec![ChainContext::new(); holdout_texts.len()];

    let n = train_set.len();
    let mut weights = WeightDistribution::<f64>::uniform(n)?;
    let mut chains = vec![ChainContext::new(); n];
    let sample_ids: Vec<u64> = train_set.samples().iter().map(|s| s.id).collect();
    let position_of: HashMap<u64, usize> = sample_ids
        .iter()
        .enumerate()
        .map(|(i, &id)| (id, i))
        .collect();

    let mut telemetry = TrainingTelemetry::new(
        c,
        sample_ids.clone(),
        holdout.as_ref().map_or(0, Corpus::len),
    );
    telemetry.snapshots.push(WeightSnapshot::new(0, &weights));
    let mut rounds: Vec<BoostRound> = Vec::new();
    let mut best_holdout = f64::NEG_INFINITY;
    let mut stale = 0usize;
    telemetry.stop_reason = StopReason::MaxRounds;

    for k in 1..=config.k_max {
        let round_seed = derive_seed(config.seed, k as u64);
        let use_chain = config.chain_in_training && k > 1;

        let mut fit_size = n;
        let fitted = match config.weighting {
            Weighting::Direct => {
                let data = TrainingData::new(
                    examples(&texts, &features, use_chain.then_some(chains.as_slice())),
                    labels.clone(),
                    c,
                    base_dim,
                )?;
                config
                    .learner
                    .fit(&data, weights.as_slice(), &label_names, round_seed)
            }
            Weighting::Materialize => {
                let counts = weights_to_counts(&weights, &config.count_policy(), round_seed)?;
                let expanded = materialize(&train_set, &counts, augmenter, round_seed)?;
                let ex_texts = expanded.texts();
                let ex_features: Vec<SparseVector> = expanded
                    .samples()
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        if i < n {
                            features[i].clone()
                        } else {
                            featurizer.transform(&s.text)
                        }
                    })
                    .collect();
                let ex_chains: Vec<ChainContext> = expanded
                    .samples()
                    .iter()
                    .map(|s| chains[position_of[&s.parent_id.unwrap_or(s.id)]].clone())
                    .collect();
                let data = TrainingData::new(
                    examples(
                        &ex_texts,
                        &ex_features,
                        use_chain.then_some(ex_chains.as_slice()),
                    ),
                    expanded.labels(),
                    c,
                    base_dim,
                )?;
                fit_size = expanded.len();
                config
                    .learner
                    .fit(&data, &vec![1.0; expanded.len()], &label_names, round_seed)
            }
        };
        let learner = fitted.map_err(|e| Error::RoundFit {
            round: k,
            source: Box::new(e),
        })?;

        let batch = learner.predict_batch(&examples(&texts, &features, Some(&chains)))?;
        let correct: Vec<bool> = batch
            .predictions
            .iter()
            .zip(&labels)
            .map(|(p, &y)| p.label == y)
            .collect();
        let raw_epsilon = weighted_error(&correct, &weights)?;
        let epsilon = clamp_epsilon(raw_epsilon);
        if epsilon >= random_guess_error::<f64>(c) {
            let msg = format!(
                "round {k} has weighted error {raw_epsilon:.6}, no better than random guessing ({:.6})",
                random_guess_error::<f64>(c)
            );
            log::warn!("{msg}; stopping");
            if rounds.is_empty() {
                return Err(Error::NoAcceptedRounds(msg));
            }
            telemetry.stop_reason = StopReason::Rejected {
                round: k,
                epsilon: raw_epsilon,
            };
            break;
        }
        let round_alpha = alpha(epsilon, c)?;
        let step = match config.update_form {
            UpdateForm::Samme => round_alpha,
            UpdateForm::HalfAlpha => round_alpha / 2.0,
        };
        let train_loss: f64 = batch
            .predictions
            .iter()
            .zip(&labels)
            .zip(weights.as_slice())
            .map(|((p, &y), &w)| -w * p.scores[y].max(1e-12).ln())
            .sum();
        let train_accuracy = correct.iter().filter(|&&b| b).count() as f64 / n as f64;
        let (next, z) = update_weights(&weights, &correct, step)?;

        for (chain, p) in chains.iter_mut().zip(&batch.predictions) {
            chain.push(p.label, epsilon);
        }

        let holdout_accuracy = if holdout_texts.is_empty() {
            None
        } else {
            let hb = learner.predict_batch(&examples(
                &holdout_texts,
                &holdout_features,
                Some(&holdout_chains),
            ))?;
            let hits = hb
                .predictions
                .iter()
                .zip(&holdout_labels)
                .filter(|(p, &y)| p.label == y)
                .count();
            for (chain, p) in holdout_chains.iter_mut().zip(&hb.predictions) {
                chain.push(p.label, epsilon);
            }
            Some(hits as f64 / holdout_labels.len() as f64)
        };

        telemetry.rounds.push(RoundTelemetry {
            round: k,
            raw_epsilon,
            epsilon,
            alpha: round_alpha,
            z,
            train_loss,
            train_accuracy,
            holdout_accuracy,
            unparsable: batch.unparsable,
            fit_size,
        });
        log::info!(
            "round {k}: eps={epsilon:.6} alpha={round_alpha:.6} z={z:.6} loss={train_loss:.6} holdout={holdout_accuracy:?}"
        );
        rounds.push(BoostRound {
            round_index: k,
            epsilon,
            alpha: round_alpha,
            z,
            learner,
        });
        weights = next;
        telemetry.snapshots.push(WeightSnapshot::new(k, &weights));

        if let Some(acc) = holdout_accuracy {
            if acc > best_holdout + 1e-12 {
                best_holdout = acc;
                stale = 0;
            } else {
                stale += 1;
                if stale >= config.patience {
                    telemetry.stop_reason = StopReason::EarlyStopped { round: k };
                    break;
                }
            }
        }
    }

    let model = EnsembleModel::new(
        train_set.label_map().clone(),
        featurizer,
        config.clone(),
        rounds,
    )?;
    Ok(TrainOutcome { model, telemetry })
}

/// Product of the per-round normalizers. For two classes this bounds the
/// training error of the weighted vote; other class counts are rejected.
pub fn training_error_bound(telemetry: &TrainingTelemetry) -> Result<f64> {
    if telemetry.n_classes != 2 {
        return Err(Error::InvalidArgument(format!(
            "the normalizer-product bound is implemented for 2 classes, not {}",
            telemetry.n_classes
        )));
    }
    if telemetry.rounds.is_empty() {
        return Err(Error::InvalidArgument("no rounds recorded".into()));
    }
    Ok(telemetry.rounds.iter().map(|r| r.z).product())
}

/// `2 sqrt(eps (1 - eps))`, the two-class normalizer under [`UpdateForm::HalfAlpha`].
pub fn half_alpha_normalizer(epsilon: f64) -> f64 {
    2.0 * (epsilon * (1.0 - epsilon)).sqrt()
}

/// Accuracy of every recurrent-chain prefix is tracked by the holdout; this
/// returns the round count with the best holdout accuracy (earliest on ties).
pub fn best_prefix(telemetry: &TrainingTelemetry) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for r in &telemetry.rounds {
        if let Some(acc) = r.holdout_accuracy {
            if best.is_none_or(|(_, b)| acc > b + 1e-12) {
                best = Some((r.round, acc));
            }
        }
    }
    best.map(|(k, _)| k)
}
