//! Re-weighting by materialization: a sample with count `k` appears once as
//! itself plus `k - 1` generated variants carrying its label and id as
//! `parent_id`.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::{Corpus, LabeledSample, Origin};
use crate::error::{Error, Result};
use crate::llm::{escape_text, CompletionClient, CompletionRequest};
use crate::seed::derive_seed;

pub trait Augmenter: Send + Sync {
    /// `k` variant texts of `text`. Must never return empty strings.
    fn variants(&self, text: &str, k: usize, seed: u64) -> Result<Vec<String>>;

    /// Concurrent `variants` calls allowed during materialization.
    fn max_in_flight(&self) -> usize {
        rayon::current_num_threads()
    }

    /// `k` augmented samples derived from `sample`, with ids
    /// `first_id, first_id + 1, ...`.
    fn generate(
        &self,
        sample: &LabeledSample,
        k: usize,
        seed: u64,
        first_id: u64,
    ) -> Result<Vec<LabeledSample>> {
        let texts = self.variants(&sample.text, k, seed)?;
        if texts.len() != k {
            return Err(Error::Augmenter {
                sample_id: sample.id,
                message: format!("asked for {k} variants, got {}", texts.len()),
            });
        }
        Ok(texts
            .into_iter()
            .enumerate()
            .map(|(j, text)| {
                LabeledSample::augmented(first_id + j as u64, text, sample.label, sample.id)
            })
            .collect())
    }
}

/// Token dropout and adjacent swaps, fully determined by the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationAugmenter {
    dropout_rate: f64,
    swap_rate: f64,
}

pub fn perturbation_augmenter(dropout_rate: f64, swap_rate: f64) -> Result<PerturbationAugmenter> {
    for (name, r) in [("dropout", dropout_rate), ("swap", swap_rate)] {
        if !(0.0..1.0).contains(&r) {
            return Err(Error::InvalidArgument(format!(
                "{name} rate must lie in [0, 1), got {r}"
            )));
        }
    }
    Ok(PerturbationAugmenter {
        dropout_rate,
        swap_rate,
    })
}

impl PerturbationAugmenter {
    /// One variant: drop `round(dropout * n)` tokens at seeded positions,
    /// then make `round(swap * (n' - 1))` seeded adjacent swaps.
    pub fn perturb(&self, text: &str, seed: u64) -> String {
        let tokens: Vec<&str> = text.split_whitespace().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = tokens.len();
        let n_drop = ((self.dropout_rate * n as f64).round() as usize).min(n);
        let mut kept: Vec<&str> = if n_drop > 0 {
            let dropped = sample(&mut rng, n, n_drop);
            let mut mask = vec![true; n];
            for i in dropped.iter() {
                mask[i] = false;
            }
            tokens
                .iter()
                .zip(mask)
                .filter(|(_, k)| *k)
                .map(|(t, _)| *t)
                .collect()
        } else {
            tokens
        };
        if kept.len() >= 2 {
            let n_swap = (self.swap_rate * (kept.len() - 1) as f64).round() as usize;
            for _ in 0..n_swap {
                let i = rng.gen_range(0..kept.len() - 1);
                kept.swap(i, i + 1);
            }
        }
        if kept.is_empty() {
            return text.to_string();
        }
        kept.join(" ")
    }
}

impl Augmenter for PerturbationAugmenter {
    fn variants(&self, text: &str, k: usize, seed: u64) -> Result<Vec<String>> {
        Ok((0..k)
            .map(|j| self.perturb(text, derive_seed(seed, j as u64)))
            .collect())
    }
}

/// Default paraphrase request; `{n}` and `{text}` are substituted.
pub const DEFAULT_AUGMENT_TEMPLATE: &str =
    "Write {n} paraphrases of the INPUT below, one per line, keeping its meaning.\n\nINPUT: {text}\n";

/// Asks a completion endpoint for paraphrases, one per response line.
/// Falls back to a perturbation augmenter when the endpoint fails or
/// returns too few lines.
pub struct RemoteAugmenter {
    client: CompletionClient,
    template: String,
    fallback: PerturbationAugmenter,
    max_in_flight: usize,
    fallbacks: AtomicUsize,
}

pub fn remote_augmenter(
    endpoint: &str,
    template: &str,
    timeout: Duration,
) -> Result<RemoteAugmenter> {
    if endpoint.is_empty() {
        return Err(Error::InvalidArgument("augmenter endpoint is empty".into()));
    }
    if !template.contains("{text}") {
        return Err(Error::InvalidArgument(
            "augmenter template must contain {text}".into(),
        ));
    }
    Ok(RemoteAugmenter {
        client: CompletionClient::new(endpoint, timeout, 2, Some(crate::llm::DEFAULT_API_KEY_ENV)),
        template: template.to_string(),
        fallback: perturbation_augmenter(0.1, 0.1)?,
        max_in_flight: 4,
        fallbacks: AtomicUsize::new(0),
    })
}

impl RemoteAugmenter {
    pub fn with_max_in_flight(mut self, limit: usize) -> Self {
        self.max_in_flight = limit.max(1);
        self
    }

    pub fn with_retries(mut self, retries: u32, timeout: Duration) -> Self {
        self.client = CompletionClient::new(
            self.client.endpoint().to_string(),
            timeout,
            retries,
            Some(crate::llm::DEFAULT_API_KEY_ENV),
        );
        self
    }

    pub fn with_fallback(mut self, fallback: PerturbationAugmenter) -> Self {
        self.fallback = fallback;
        self
    }

    /// How many times the local fallback had to be used.
    pub fn fallback_count(&self) -> usize {
        self.fallbacks.load(Ordering::SeqCst)
    }

    fn render(&self, text: &str, k: usize) -> String {
        self.template
            .replace("{n}", &k.to_string())
            .replace("{text}", &escape_text(text))
    }
}

impl Augmenter for RemoteAugmenter {
    fn variants(&self, text: &str, k: usize, seed: u64) -> Result<Vec<String>> {
        if k == 0 {
            return Ok(Vec::new());
        }
        let request = CompletionRequest {
            model: None,
            prompt: self.render(text, k),
            max_tokens: None,
            temperature: None,
            n: Some(k),
        };
        let mut lines: Vec<String> = match self.client.send(&request) {
            Ok(resp) => resp
                .choices
                .iter()
                .flat_map(|c| c.text.lines())
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .take(k)
                .collect(),
            Err(e) => {
                log::warn!("remote augmenter failed, falling back to perturbation: {e}");
                Vec::new()
            }
        };
        if lines.len() < k {
            if !lines.is_empty() {
                log::warn!(
                    "remote augmenter returned {} of {k} variants; topping up locally",
                    lines.len()
                );
            }
            self.fallbacks.fetch_add(1, Ordering::SeqCst);
            let missing = k - lines.len();
            lines.extend(self.fallback.variants(text, missing, seed)?);
        }
        Ok(lines)
    }

    fn max_in_flight(&self) -> usize {
        self.max_in_flight
    }
}

/// Originals in input order, then each sample's `count - 1` variants grouped
/// by parent. Augmented ids continue after the largest input id.
pub fn materialize(
    corpus: &Corpus,
    counts: &[usize],
    augmenter: &dyn Augmenter,
    seed: u64,
) -> Result<Corpus> {
    if counts.len() != corpus.len() {
        return Err(Error::LengthMismatch {
            expected: corpus.len(),
            actual: counts.len(),
        });
    }
    if let Some(pos) = counts.iter().position(|&c| c == 0) {
        return Err(Error::InvalidArgument(format!(
            "count for sample {} is 0; every sample needs at least one copy",
            corpus.samples()[pos].id
        )));
    }
    if corpus
        .samples()
        .iter()
        .any(|s| s.origin != Origin::Original)
    {
        return Err(Error::InvalidArgument(
            "materialize expects a corpus of original samples".into(),
        ));
    }
    let mut next_id = corpus.max_id() + 1;
    let jobs: Vec<(usize, u64)> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 1)
        .map(|(i, &c)| {
            let first = next_id;
            next_id += (c - 1) as u64;
            (i, first)
        })
        .collect();

    let run = || {
        jobs.par_iter()
            .map(|&(i, first_id)| {
                let s = &corpus.samples()[i];
                augmenter
                    .generate(s, counts[i] - 1, derive_seed(seed, s.id), first_id)
                    .map_err(|e| match e {
                        Error::Augmenter { .. } => e,
                        other => Error::Augmenter {
                            sample_id: s.id,
                            message: other.to_string(),
                        },
                    })
            })
            .collect::<Result<Vec<_>>>()
    };
    let generated = match rayon::ThreadPoolBuilder::new()
        .num_threads(augmenter.max_in_flight().max(1))
        .build()
    {
        Ok(pool) => pool.install(run)?,
        Err(_) => run()?,
    };

    let mut samples = corpus.samples().to_vec();
    samples.extend(generated.into_iter().flatten());
    Corpus::new(samples, corpus.label_map().clone())
}
