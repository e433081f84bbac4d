//! Adaptive boosting for text classifiers with recurrent chained inference.
//!
//! Each boosting round trains a base learner on a re-weighted view of the
//! training set. At inference, round `k` sees the labels and error rates of
//! rounds `1..k` for the same input, and the last round's answer is the
//! ensemble's answer. A conventional alpha-weighted vote is available for
//! comparison.

pub mod augment;
pub mod boosting;
pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod learners;
pub mod llm;
pub mod metrics;
pub mod seed;
pub mod synth;
pub mod telemetry;
pub mod weights;

pub use augment::{materialize, perturbation_augmenter, remote_augmenter, Augmenter};
pub use boosting::{train, BoostConfig, TrainOutcome, UpdateForm, Weighting};
pub use dataset::{ClassLabelMap, Corpus, CorpusFormat, LabeledSample, Origin};
pub use ensemble::{ChainContext, EnsembleModel, EnsemblePrediction, InferenceMode};
pub use error::{Error, Result};
pub use learners::{BaseLearner, LearnerConfig, PredictionResult};
pub use metrics::MetricsReport;
pub use telemetry::TrainingTelemetry;

/// Weight distribution at the precision used throughout training.
pub type Weights = weights::WeightDistribution<f64>;
/// Per-round error, alpha and normalizer at training precision.
pub type RoundStats = weights::RoundStatistics<f64>;
