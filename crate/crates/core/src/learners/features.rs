//! Tokenization and signed feature hashing.

use serde::{Deserialize, Serialize};

use crate::ensemble::ChainContext;
use crate::error::{Error, Result};

/// Sparse feature vector with strictly increasing indices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    /// Sorts, merges duplicate indices by summation and drops zeros.
    pub fn from_pairs(mut pairs: Vec<(u32, f64)>) -> Self {
        pairs.sort_by_key(|&(i, _)| i);
        let mut entries: Vec<(u32, f64)> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            match entries.last_mut() {
                Some((j, acc)) if *j == i => *acc += v,
                _ => entries.push((i, v)),
            }
        }
        entries.retain(|&(_, v)| v != 0.0);
        Self { entries }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: u32) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|p| self.entries[p].1)
            .unwrap_or(0.0)
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|&(i, v)| dense[i as usize] * v)
            .sum()
    }

    /// Appends entries whose indices all exceed the current maximum.
    pub(crate) fn extended(&self, tail: &[(u32, f64)]) -> SparseVector {
        debug_assert!(tail
            .first()
            .zip(self.entries.last())
            .is_none_or(|(t, h)| t.0 > h.0));
        let mut entries = Vec::with_capacity(self.entries.len() + tail.len());
        entries.extend_from_slice(&self.entries);
        entries.extend(tail.iter().copied().filter(|&(_, v)| v != 0.0));
        SparseVector { entries }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    BagOfWords,
    Tfidf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeaturizerConfig {
    pub mode: FeatureMode,
    /// Hashed feature space size; a power of two no smaller than 1024.
    pub dimension: usize,
    pub lowercase: bool,
}

impl Default for FeaturizerConfig {
    fn default() -> Self {
        Self {
            mode: FeatureMode::BagOfWords,
            dimension: 1 << 14,
            lowercase: true,
        }
    }
}

impl FeaturizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.dimension.is_power_of_two() || self.dimension < 1 << 10 {
            return Err(Error::InvalidArgument(format!(
                "feature dimension must be a power of two >= 1024, got {}",
                self.dimension
            )));
        }
        if self.dimension > u32::MAX as usize / 2 {
            return Err(Error::InvalidArgument("feature dimension too large".into()));
        }
        Ok(())
    }
}

/// Splits on anything that is not alphanumeric (whitespace and punctuation).
pub fn tokenize(text: &str, lowercase: bool) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| {
            if lowercase {
                t.to_lowercase()
            } else {
                t.to_string()
            }
        })
        .collect()
}

/// 64-bit FNV-1a.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Hashed index and sign of a token.
pub fn hash_token(token: &str, dimension: usize) -> (u32, f64) {
    let h = fnv1a(token.as_bytes());
    let index = (h & (dimension as u64 - 1)) as u32;
    let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
    (index, sign)
}

/// Text to hashed sparse vector, with optional fitted IDF table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Featurizer {
    config: FeaturizerConfig,
    /// `(index, idf)` for indices seen at fit time, tfidf mode only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    idf: Option<Vec<(u32, f64)>>,
    #[serde(default)]
    unseen_idf: f64,
}

impl Featurizer {
    /// Bag-of-words featurizers need no fitting; tfidf ones learn document
    /// frequencies from `texts`.
    pub fn fit<'a>(
        config: FeaturizerConfig,
        texts: impl IntoIterator<Item = &'a str>,
    ) -> Result<Self> {
        config.validate()?;
        match config.mode {
            FeatureMode::BagOfWords => Ok(Self {
                config,
                idf: None,
                unseen_idf: 1.0,
            }),
            FeatureMode::Tfidf => {
                let mut df = std::collections::BTreeMap::<u32, usize>::new();
                let mut n_docs = 0usize;
                for text in texts {
                    n_docs += 1;
                    let mut seen: Vec<u32> = tokenize(text, config.lowercase)
                        .iter()
                        .map(|t| hash_token(t, config.dimension).0)
                        .collect();
                    seen.sort_unstable();
                    seen.dedup();
                    for i in seen {
                        *df.entry(i).or_default() += 1;
                    }
                }
                let n = n_docs as f64;
                let idf = df
                    .into_iter()
                    .map(|(i, d)| (i, ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0))
                    .collect();
                Ok(Self {
                    config,
                    idf: Some(idf),
                    unseen_idf: (1.0 + n).ln() + 1.0,
                })
            }
        }
    }

    pub fn config(&self) -> &FeaturizerConfig {
        &self.config
    }

    pub fn dimension(&self) -> usize {
        self.config.dimension
    }

    pub fn transform(&self, text: &str) -> SparseVector {
        let pairs: Vec<(u32, f64)> = tokenize(text, self.config.lowercase)
            .iter()
            .map(|t| hash_token(t, self.config.dimension))
            .collect();
        let v = SparseVector::from_pairs(pairs);
        match &self.idf {
            None => v,
            Some(idf) => {
                let scaled: Vec<(u32, f64)> = v
                    .iter()
                    .map(|(i, x)| {
                        let w = idf
                            .binary_search_by_key(&i, |&(j, _)| j)
                            .map(|p| idf[p].1)
                            .unwrap_or(self.unseen_idf);
                        (i, x * w)
                    })
                    .collect();
                let norm = scaled.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
                let scaled = if norm > 0.0 {
                    scaled.into_iter().map(|(i, x)| (i, x / norm)).collect()
                } else {
                    scaled
                };
                SparseVector::from_pairs(scaled)
            }
        }
    }
}

/// Where the chain slots live in a learner's feature space.
///
/// Slots `base .. base + c` hold a one-hot of the previous round's label
/// scaled by `1 - eps`; slot `base + c` holds that round's `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainLayout {
    pub base_dimension: usize,
    pub n_classes: usize,
}

impl ChainLayout {
    pub fn total_dimension(&self) -> usize {
        self.base_dimension + self.n_classes + 1
    }

    pub fn slots(&self, chain: &ChainContext) -> Vec<(u32, f64)> {
        match chain.last() {
            None => Vec::new(),
            Some(entry) => {
                let label = entry.label.min(self.n_classes - 1);
                vec![
                    ((self.base_dimension + label) as u32, 1.0 - entry.epsilon),
                    ((self.base_dimension + self.n_classes) as u32, entry.epsilon),
                ]
            }
        }
    }

    pub fn apply(&self, features: &SparseVector, chain: Option<&ChainContext>) -> SparseVector {
        match chain {
            Some(chain) if !chain.is_empty() => features.extended(&self.slots(chain)),
            _ => features.clone(),
        }
    }
}
