//! Seeded synthetic corpora for tests, benchmarks and the bundled fixtures.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{ClassLabelMap, Corpus, LabeledSample};
use crate::error::{Error, Result};

pub const NEWS_LABELS: [&str; 4] = ["World", "Sports", "Business", "Sci/Tech"];

const SYLLABLES: [&str; 24] = [
    "ka", "lo", "mi", "ten", "ru", "sa", "vo", "zen", "bi", "dor", "fel", "gan", "hu", "jo", "lin",
    "mar", "nel", "pra", "qui", "sor", "tal", "vex", "wyn", "yor",
];

/// Pronounceable pseudo-word for `index`; distinct indices give distinct words.
pub fn pseudo_word(index: usize) -> String {
    let n = SYLLABLES.len();
    let mut i = index;
    let mut word = String::new();
    for _ in 0..3 {
        word.push_str(SYLLABLES[i % n]);
        i /= n;
    }
    while i > 0 {
        word.push_str(SYLLABLES[i % n]);
        i /= n;
    }
    word
}

/// Parameters of the four-class news-style generator.
#[derive(Debug, Clone, PartialEq)]
pub struct NewsConfig {
    pub n_samples: usize,
    /// Words per topical aspect; each class owns two aspects.
    pub aspect_vocab: usize,
    /// Words shared by all classes.
    pub common_vocab: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Probability that a token is topical rather than common.
    pub topic_rate: f64,
    /// Share of documents that blend an own aspect with the partner
    /// class's second aspect.
    pub crossover_rate: f64,
}

impl Default for NewsConfig {
    fn default() -> Self {
        Self {
            n_samples: 2000,
            aspect_vocab: 80,
            common_vocab: 400,
            min_len: 10,
            max_len: 24,
            topic_rate: 0.3,
            crossover_rate: 0.55,
        }
    }
}

/// Four balanced news-style classes (World, Sports, Business, Sci/Tech).
///
/// Class `y` owns aspects `2y` and `2y + 1`. A focused document draws all
/// its topical words from one own aspect. A crossover document mixes aspect
/// `2y` with aspect `2p + 1` of its partner class `p`. Word frequencies are
/// Zipf-distributed within each aspect and the common vocabulary.
///
/// Topical words of a document are tied to one latent aspect, so a class's
/// pooled word distribution is a mixture, which a per-class multinomial
/// model cannot represent.
pub fn news_corpus(config: &NewsConfig, seed: u64) -> Result<Corpus> {
    if config.n_samples < 8 || config.min_len == 0 || config.max_len < config.min_len {
        return Err(Error::InvalidArgument(
            "news generator needs >= 8 samples and 1 <= min_len <= max_len".into(),
        ));
    }
    if config.aspect_vocab == 0 || config.common_vocab == 0 {
        return Err(Error::InvalidArgument(
            "vocabulary sizes must be positive".into(),
        ));
    }
    for (name, p) in [
        ("topic_rate", config.topic_rate),
        ("crossover_rate", config.crossover_rate),
    ] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "{name} must lie in [0, 1], got {p}"
            )));
        }
    }
    let c = NEWS_LABELS.len();
    // World <-> Business, Sports <-> Sci/Tech.
    let partner = |label: usize| [2, 3, 0, 1][label];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zipf = |n: usize| {
        WeightedIndex::new((1..=n).map(|r| 1.0 / r as f64)).expect("nonempty vocabulary")
    };
    let aspect_dist = zipf(config.aspect_vocab);
    let common_dist = zipf(config.common_vocab);
    let common_base = 2 * c * config.aspect_vocab;

    let mut samples = Vec::with_capacity(config.n_samples);
    for i in 0..config.n_samples {
        let label = i % c;
        let aspects = if rng.gen_bool(config.crossover_rate) {
            [2 * label, 2 * partner(label) + 1]
        } else {
            let a = 2 * label + rng.gen_range(0..2);
            [a, a]
        };
        let len = rng.gen_range(config.min_len..=config.max_len);
        let tokens: Vec<String> = (0..len)
            .map(|_| {
                if rng.gen_bool(config.topic_rate) {
                    let aspect = aspects[rng.gen_range(0..2)];
                    pseudo_word(aspect * config.aspect_vocab + aspect_dist.sample(&mut rng))
                } else {
                    pseudo_word(common_base + common_dist.sample(&mut rng))
                }
            })
            .collect();
        samples.push(LabeledSample::original(i as u64, tokens.join(" "), label));
    }
    samples.shuffle(&mut rng);
    for (i, s) in samples.iter_mut().enumerate() {
        s.id = i as u64;
    }
    Corpus::new(samples, ClassLabelMap::new(NEWS_LABELS)?)
}

/// `n` samples over `c` classes where the token `key<label>` names the
/// label and `noise` further tokens carry no signal.
pub fn copy_task_corpus(n: usize, c: usize, noise: usize, seed: u64) -> Result<Corpus> {
    if c < 2 || n < c {
        return Err(Error::InvalidArgument(
            "copy task needs c >= 2 and n >= c".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n)
        .map(|i| {
            let label = i % c;
            let mut tokens = vec![format!("key{label}")];
            tokens.extend((0..noise).map(|_| pseudo_word(rng.gen_range(0..200))));
            tokens.shuffle(&mut rng);
            LabeledSample::original(i as u64, tokens.join(" "), label)
        })
        .collect();
    let names: Vec<String> = (0..c).map(|k| format!("class{k}")).collect();
    Corpus::new(samples, ClassLabelMap::new(names)?)
}

/// Eight two-class samples over the tokens `a`..`f`. No presence test is
/// perfect and each of the first three stump rounds has a unique best split.
pub fn oracle_corpus() -> Corpus {
    let rows: [(&str, usize); 8] = [
        ("c e", 0),
        ("d", 0),
        ("a b e", 0),
        ("c d f", 0),
        ("a d f", 1),
        ("e f", 1),
        ("b d e", 1),
        ("e", 1),
    ];
    let samples = rows
        .iter()
        .enumerate()
        .map(|(i, &(t, y))| LabeledSample::original(i as u64, t, y))
        .collect();
    Corpus::new(
        samples,
        ClassLabelMap::new(["neg", "pos"]).expect("two labels"),
    )
    .expect("valid corpus")
}
