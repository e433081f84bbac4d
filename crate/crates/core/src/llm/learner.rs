use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::client::{CompletionClient, RemoteLearnerConfig};
use super::parse::parse_label;
use super::prompt::{build_prompt, PromptTemplate, Shot, MAX_SHOTS};
use crate::dataset::ClassLabelMap;
use crate::error::{Error, Result};
use crate::learners::{BaseLearner, BatchPrediction, Example, PredictionResult, TrainingData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotSelection {
    /// Highest-weight samples, round-robin over classes.
    #[default]
    Rank,
    /// Seeded uniform sample.
    Random,
}

/// Configuration of the remote completion learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RemoteLearnerSettings {
    pub remote: RemoteLearnerConfig,
    /// Task noun used in the generated instruction, e.g. `SENTIMENT`.
    pub task: String,
    /// Overrides the generated instruction entirely.
    pub instruction: Option<String>,
    pub shots: usize,
    pub shot_selection: ShotSelection,
}

impl Default for RemoteLearnerSettings {
    fn default() -> Self {
        Self {
            remote: RemoteLearnerConfig::default(),
            task: "CATEGORY".into(),
            instruction: None,
            shots: 0,
            shot_selection: ShotSelection::Rank,
        }
    }
}

impl RemoteLearnerSettings {
    pub fn validate(&self) -> Result<()> {
        self.remote.validate()?;
        if self.shots > MAX_SHOTS {
            return Err(Error::InvalidArgument(format!(
                "shots must be at most {MAX_SHOTS}, got {}",
                self.shots
            )));
        }
        Ok(())
    }
}

fn select_shots(
    data: &TrainingData<'_>,
    weights: &[f64],
    count: usize,
    mode: ShotSelection,
    seed: u64,
) -> Vec<Shot> {
    let count = count.min(data.len());
    let picked: Vec<usize> = match mode {
        ShotSelection::Random => {
            let mut idx: Vec<usize> = (0..data.len()).collect();
            idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            idx.truncate(count);
            idx
        }
        ShotSelection::Rank => {
            let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); data.n_classes];
            for (i, &l) in data.labels.iter().enumerate() {
                per_class[l].push(i);
            }
            for members in &mut per_class {
                members.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
            }
            let mut out = Vec::with_capacity(count);
            let mut depth = 0;
            while out.len() < count {
                for members in &per_class {
                    if out.len() < count {
                        if let Some(&i) = members.get(depth) {
                            out.push(i);
                        }
                    }
                }
                depth += 1;
            }
            out
        }
    };
    picked
        .into_iter()
        .map(|i| Shot {
            text: data.examples[i].text.to_string(),
            label: data.labels[i],
        })
        .collect()
}

/// Prompted remote model used as a base learner. Fitting only picks
/// demonstrations; predictions are one-hot on the parsed completion, or
/// uniform when the completion names no single label.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemoteLearner {
    config: RemoteLearnerConfig,
    template: PromptTemplate,
    uses_chain: bool,
    #[serde(skip)]
    client: OnceLock<CompletionClient>,
}

impl RemoteLearner {
    pub fn new(
        config: RemoteLearnerConfig,
        template: PromptTemplate,
        uses_chain: bool,
    ) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            template,
            uses_chain,
            client: OnceLock::new(),
        })
    }

    pub fn fit(
        settings: &RemoteLearnerSettings,
        data: &TrainingData<'_>,
        weights: &[f64],
        label_names: &[String],
        seed: u64,
    ) -> Result<Self> {
        settings.validate()?;
        data.check_weights(weights)?;
        let label_map = ClassLabelMap::new(label_names.to_vec())?;
        if label_map.len() != data.n_classes {
            return Err(Error::LabelMapMismatch(format!(
                "{} label names for {} classes",
                label_map.len(),
                data.n_classes
            )));
        }
        let instruction = settings.instruction.clone().unwrap_or_else(|| {
            PromptTemplate::classification_instruction(&settings.task, &label_map)
        });
        let shots = select_shots(data, weights, settings.shots, settings.shot_selection, seed);
        let template = PromptTemplate::new(instruction, &label_map, shots)?;
        Self::new(settings.remote.clone(), template, data.has_chain())
    }

    pub fn template(&self) -> &PromptTemplate {
        &self.template
    }

    fn client(&self) -> &CompletionClient {
        self.client
            .get_or_init(|| CompletionClient::from_config(&self.config))
    }

    /// Prediction plus whether the completion could be parsed.
    pub fn predict_detailed(&self, example: &Example<'_>) -> Result<(PredictionResult, bool)> {
        let chain = if self.uses_chain { example.chain } else { None };
        let prompt = build_prompt(&self.template, example.text, chain);
        let completion = self.client().complete(&self.config, &prompt)?;
        let label_map = ClassLabelMap::new(self.template.label_names().to_vec())?;
        let c = label_map.len();
        match parse_label(&completion, &label_map) {
            Ok(label) => Ok((PredictionResult::one_hot(label, c), true)),
            Err(e) => {
                log::debug!("unparsable completion: {e}");
                Ok((PredictionResult::uniform(c), false))
            }
        }
    }
}

impl BaseLearner for RemoteLearner {
    fn predict(&self, example: &Example<'_>) -> Result<PredictionResult> {
        Ok(self.predict_detailed(example)?.0)
    }

    fn predict_batch(&self, examples: &[Example<'_>]) -> Result<BatchPrediction> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.max_in_flight)
            .build()
            .map_err(|e| Error::Remote(e.to_string()))?;
        let results: Vec<(PredictionResult, bool)> = pool.install(|| {
            examples
                .par_iter()
                .map(|e| self.predict_detailed(e))
                .collect::<Result<_>>()
        })?;
        let unparsable = results.iter().filter(|(_, ok)| !ok).count();
        Ok(BatchPrediction {
            predictions: results.into_iter().map(|(p, _)| p).collect(),
            unparsable,
        })
    }

    fn uses_chain(&self) -> bool {
        self.uses_chain
    }
}
