//! End-to-end acceptance run: one PASS/FAIL line per criterion.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use chainboost::dataset::stratified_split;
use chainboost::ensemble::BoostRound;
use chainboost::learners::{
    Example, Featurizer, FeaturizerConfig, Learner, LogisticParams, LogisticRegression, NaiveBayes,
    NaiveBayesParams, TrainingData,
};
use chainboost::llm::{
    build_prompt, MockBehavior, MockServer, PromptTemplate, RemoteLearnerConfig,
    RemoteLearnerSettings, Shot,
};
use chainboost::metrics::macro_f1;
use chainboost::synth::{copy_task_corpus, news_corpus, oracle_corpus, NewsConfig};
use chainboost::weights::{alpha, update_weights, weighted_error, EPSILON_FLOOR};
use chainboost::{
    perturbation_augmenter, train, BaseLearner, BoostConfig, ChainContext, ClassLabelMap, Corpus,
    EnsembleModel, InferenceMode, LabeledSample, LearnerConfig, Weighting, Weights,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Check + 'a>);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn close(a: f64, b: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure(
        (a - b).abs() <= tol,
        format!("{what}: {a} vs {b} (tol {tol:e})"),
    )
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, format!("took {took:.2?}, limit {limit:?}"))
}

// Criterion 1 ---------------------------------------------------------------

struct OracleRound {
    epsilon: f64,
    alpha: f64,
    z: f64,
    weights: Vec<f64>,
}

/// Presence stumps by exhaustive search over every token and every pair of
/// branch labels, then the multiplicative update written out longhand.
fn brute_force_trace(
    docs: &[BTreeSet<&str>],
    labels: &[usize],
    c: usize,
    rounds: usize,
) -> Result<Vec<OracleRound>, String> {
    let n = docs.len();
    let vocab: BTreeSet<&str> = docs.iter().flatten().copied().collect();
    let mut w = vec![1.0 / n as f64; n];
    let mut out = Vec::new();
    for _ in 0..rounds {
        let mut candidates: Vec<(f64, Vec<usize>)> = Vec::new();
        for k in 0..c {
            candidates.push((0.0, vec![k; n]));
        }
        for t in &vocab {
            for a in 0..c {
                for b in 0..c {
                    candidates.push((
                        0.0,
                        docs.iter()
                            .map(|d| if d.contains(t) { a } else { b })
                            .collect(),
                    ));
                }
            }
        }
        for (err, pred) in &mut candidates {
            *err = (0..n).filter(|&i| pred[i] != labels[i]).map(|i| w[i]).sum();
        }
        candidates.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        let best_err = candidates[0].0;
        let best = &candidates[0].1;
        if let Some(other) = candidates
            .iter()
            .find(|(e, p)| p != best && (e - best_err).abs() < 1e-12)
        {
            return Err(format!(
                "tie between stumps at error {best_err}: {:?} and {:?}",
                best, other.1
            ));
        }
        let a = ((1.0 - best_err) / best_err).ln() + ((c - 1) as f64).ln();
        let raw: Vec<f64> = (0..n)
            .map(|i| {
                if best[i] == labels[i] {
                    w[i] * (-a).exp()
                } else {
                    w[i] * a.exp()
                }
            })
            .collect();
        let z: f64 = raw.iter().sum();
        w = raw.iter().map(|x| x / z).collect();
        out.push(OracleRound {
            epsilon: best_err,
            alpha: a,
            z,
            weights: w.clone(),
        });
    }
    Ok(out)
}

fn samme_trace() -> Check {
    let start = Instant::now();
    let corpus = oracle_corpus();
    let docs: Vec<BTreeSet<&str>> = corpus
        .samples()
        .iter()
        .map(|s| s.text.split(' ').collect())
        .collect();
    let oracle = brute_force_trace(&docs, &corpus.labels(), 2, 3)?;

    let config = BoostConfig {
        k_max: 3,
        learner: LearnerConfig::Stump,
        weighting: Weighting::Direct,
        chain_in_training: false,
        holdout_fraction: 0.0,
        ..Default::default()
    };
    let aug = perturbation_augmenter(0.0, 0.0).map_err(|e| e.to_string())?;
    let t = train(&corpus, &config, &aug)
        .map_err(|e| e.to_string())?
        .telemetry;
    ensure(t.rounds.len() == 3, format!("{} rounds", t.rounds.len()))?;
    for (k, (got, want)) in t.rounds.iter().zip(&oracle).enumerate() {
        let r = k + 1;
        close(got.raw_epsilon, want.epsilon, 1e-9, &format!("eps_{r}"))?;
        close(got.alpha, want.alpha, 1e-9, &format!("alpha_{r}"))?;
        close(got.z, want.z, 1e-9, &format!("Z_{r}"))?;
        let snap = t
            .snapshots
            .iter()
            .find(|s| s.round == r)
            .ok_or(format!("no snapshot {r}"))?;
        for (i, id) in t.sample_ids.iter().enumerate() {
            close(
                snap.weights[i],
                want.weights[*id as usize],
                1e-9,
                &format!("W_{r}[{id}]"),
            )?;
        }
    }
    within(Duration::from_secs(1), start)?;
    let eps: Vec<String> = oracle.iter().map(|o| format!("{:.6}", o.epsilon)).collect();
    Ok(format!(
        "eps = [{}] in {:.0?}",
        eps.join(", "),
        start.elapsed()
    ))
}

// Criterion 2 ---------------------------------------------------------------

fn closed_forms() -> Check {
    let e = |e: chainboost::Error| e.to_string();
    close(alpha(0.5f64, 2).map_err(e)?, 0.0, 0.0, "alpha(0.5, 2)")?;
    close(
        alpha(0.3f64, 4).map_err(e)?,
        7f64.ln(),
        1e-12,
        "alpha(0.3, 4)",
    )?;

    let w = Weights::uniform(3).map_err(e)?;
    let mask = [false, true, true];
    let a = alpha(weighted_error(&mask, &w).map_err(e)?, 2).map_err(e)?;
    let (next, z) = update_weights(&w, &mask, a).map_err(e)?;
    for (x, want) in next
        .as_slice()
        .iter()
        .zip([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0])
    {
        close(*x, want, 1e-15, "3-sample weight")?;
    }
    close(z, 1.0, 1e-15, "3-sample Z")?;

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0f64;
    let mut done = 0;
    while done < 1000 {
        let n = rng.gen_range(2..50);
        let mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        if mask.iter().all(|&m| m) || mask.iter().all(|&m| !m) {
            continue;
        }
        let w =
            Weights::normalized((0..n).map(|_| rng.gen_range(0.01..1.0)).collect()).map_err(e)?;
        let a = alpha(weighted_error(&mask, &w).map_err(e)?, 2).map_err(e)?;
        let (_, z) = update_weights(&w, &mask, a).map_err(e)?;
        worst = worst.max((z - 1.0).abs());
        done += 1;
    }
    ensure(worst <= 1e-12, format!("binary Z deviates by {worst:e}"))?;
    Ok(format!("binary |Z - 1| <= {worst:.1e} over 1000 draws"))
}

// Criterion 3 ---------------------------------------------------------------

fn distribution_invariants() -> Check {
    let e = |e: chainboost::Error| e.to_string();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut done = 0;
    let mut worst_ratio = 0f64;
    while done < 1000 {
        let n = rng.gen_range(2..60);
        let c = rng.gen_range(2..10);
        let mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.7)).collect();
        let Some(wrong) = mask.iter().position(|&m| !m) else {
            continue;
        };
        let Some(right) = mask.iter().position(|&m| m) else {
            continue;
        };
        let w =
            Weights::normalized((0..n).map(|_| rng.gen_range(0.001..1.0)).collect()).map_err(e)?;
        let a = alpha(weighted_error(&mask, &w).map_err(e)?, c).map_err(e)?;
        let (next, _) = update_weights(&w, &mask, a).map_err(e)?;
        ensure(next.as_slice().iter().all(|&x| x >= 0.0), "negative weight")?;
        close(next.sum(), 1.0, 1e-9, "sum")?;
        let growth = (next.as_slice()[wrong] / next.as_slice()[right])
            / (w.as_slice()[wrong] / w.as_slice()[right]);
        let rel = (growth / (2.0 * a).exp() - 1.0).abs();
        worst_ratio = worst_ratio.max(rel);
        ensure(
            rel <= 1e-9,
            format!("ratio growth {growth} vs e^(2 alpha) {}", (2.0 * a).exp()),
        )?;
        done += 1;
    }
    Ok(format!(
        "1000 updates, worst relative ratio error {worst_ratio:.1e}"
    ))
}

// Criteria 4 and 5 ------------------------------------------------------------

struct SeedResult {
    single: f64,
    recurrent: f64,
    vote: f64,
}

fn news_runs() -> Result<(Vec<SeedResult>, Duration), String> {
    let start = Instant::now();
    let aug = perturbation_augmenter(0.1, 0.1).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for seed in 0..5u64 {
        let e = |e: chainboost::Error| format!("seed {seed}: {e}");
        let corpus = news_corpus(&NewsConfig::default(), seed).map_err(e)?;
        let (train_c, test_c) = stratified_split(&corpus, 0.25, seed).map_err(e)?;
        let config = BoostConfig {
            k_max: 7,
            learner: LearnerConfig::NaiveBayes(NaiveBayesParams::default()),
            holdout_fraction: 0.0,
            seed,
            ..Default::default()
        };
        let single = train(
            &train_c,
            &BoostConfig {
                k_max: 1,
                ..config.clone()
            },
            &aug,
        )
        .map_err(e)?;
        let boosted = train(&train_c, &config, &aug).map_err(e)?;
        out.push(SeedResult {
            single: single
                .model
                .evaluate(&test_c, InferenceMode::Recurrent)
                .map_err(e)?
                .accuracy,
            recurrent: boosted
                .model
                .evaluate(&test_c, InferenceMode::Recurrent)
                .map_err(e)?
                .accuracy,
            vote: boosted
                .model
                .evaluate(&test_c, InferenceMode::WeightedVote)
                .map_err(e)?
                .accuracy,
        });
    }
    Ok((out, start.elapsed()))
}

fn pct(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

fn boosting_improves(runs: &Result<(Vec<SeedResult>, Duration), String>) -> Check {
    let (runs, took) = runs.as_ref().map_err(Clone::clone)?;
    let mean = |f: &dyn Fn(&SeedResult) -> f64| runs.iter().map(f).sum::<f64>() / runs.len() as f64;
    let single = mean(&|r| r.single);
    let boosted = mean(&|r| r.recurrent);
    let detail = runs
        .iter()
        .map(|r| format!("{}->{}", pct(r.single), pct(r.recurrent)))
        .collect::<Vec<_>>()
        .join(" ");
    ensure(
        boosted >= single + 0.01,
        format!("mean {} vs single {} ({detail})", pct(boosted), pct(single)),
    )?;
    for (seed, r) in runs.iter().enumerate() {
        ensure(
            r.recurrent >= r.single,
            format!("seed {seed} regresses: {detail}"),
        )?;
    }
    ensure(*took < Duration::from_secs(60), format!("took {took:.1?}"))?;
    Ok(format!(
        "mean {} -> {} ({detail}) in {took:.1?}",
        pct(single),
        pct(boosted)
    ))
}

fn ablation_direction(runs: &Result<(Vec<SeedResult>, Duration), String>) -> Check {
    let (runs, _) = runs.as_ref().map_err(Clone::clone)?;
    for (seed, r) in runs.iter().enumerate() {
        ensure(
            r.recurrent >= r.vote - 0.005,
            format!(
                "seed {seed}: recurrent {} < vote {} - 0.5",
                pct(r.recurrent),
                pct(r.vote)
            ),
        )?;
    }
    let detail = runs
        .iter()
        .map(|r| format!("{}/{}", pct(r.recurrent), pct(r.vote)))
        .collect::<Vec<_>>()
        .join(" ");
    Ok(format!("recurrent/vote per seed: {detail}"))
}

// Criterion 6 ---------------------------------------------------------------

fn strip_keys(text: &str) -> String {
    text.split(' ')
        .filter(|t| !t.starts_with("key"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn chain_copy() -> Check {
    let e = |e: chainboost::Error| e.to_string();
    let corpus = copy_task_corpus(400, 4, 6, 4).map_err(e)?;
    let (train_c, test_c) = stratified_split(&corpus, 0.25, 4).map_err(e)?;
    let featurizer = Featurizer::fit(FeaturizerConfig::default(), train_c.texts()).map_err(e)?;
    let dim = featurizer.dimension();
    let labels = train_c.labels();
    let uniform = vec![1.0; train_c.len()];

    // Round 1 sees the key token and is perfectly informative.
    let full: Vec<_> = train_c
        .texts()
        .iter()
        .map(|t| featurizer.transform(t))
        .collect();
    let ex1: Vec<Example<'_>> = train_c
        .texts()
        .iter()
        .zip(&full)
        .map(|(t, f)| Example {
            text: t,
            features: f,
            chain: None,
        })
        .collect();
    let data1 = TrainingData::new(ex1.clone(), labels.clone(), 4, dim).map_err(e)?;
    let nb = NaiveBayes::fit(&data1, &uniform, &NaiveBayesParams::default()).map_err(e)?;
    let round1 = nb.predict_batch(&ex1).map_err(e)?.predictions;
    let eps1 = round1
        .iter()
        .zip(&labels)
        .filter(|(p, y)| p.label != **y)
        .count() as f64
        / labels.len() as f64;
    ensure(
        eps1 == 0.0,
        format!("round 1 is not perfect on train (eps {eps1})"),
    )?;

    // Round 2 only sees noise words, with or without the chain.
    let noise_texts: Vec<String> = train_c.texts().iter().map(|t| strip_keys(t)).collect();
    let noise: Vec<_> = noise_texts
        .iter()
        .map(|t| featurizer.transform(t))
        .collect();
    let chains: Vec<ChainContext> = round1
        .iter()
        .map(|p| {
            let mut c = ChainContext::new();
            c.push(p.label, eps1.max(EPSILON_FLOOR));
            c
        })
        .collect();
    let examples = |with_chain: bool| -> Vec<Example<'_>> {
        (0..noise.len())
            .map(|i| Example {
                text: &noise_texts[i],
                features: &noise[i],
                chain: with_chain.then_some(&chains[i]),
            })
            .collect()
    };
    let params = LogisticParams::default();
    let chained = LogisticRegression::fit(
        &TrainingData::new(examples(true), labels.clone(), 4, dim).map_err(e)?,
        &uniform,
        &params,
        1,
    )
    .map_err(e)?;
    let plain = LogisticRegression::fit(
        &TrainingData::new(examples(false), labels.clone(), 4, dim).map_err(e)?,
        &uniform,
        &params,
        1,
    )
    .map_err(e)?;

    let round = |i: usize, learner: Learner| BoostRound {
        round_index: i,
        epsilon: EPSILON_FLOOR,
        alpha: 1.0,
        z: 1.0,
        learner,
    };
    let config = BoostConfig::default();
    let map = train_c.label_map().clone();
    let chained_model = EnsembleModel::new(
        map.clone(),
        featurizer.clone(),
        config.clone(),
        vec![
            round(1, Learner::NaiveBayes(nb)),
            round(2, Learner::Logistic(chained)),
        ],
    )
    .map_err(e)?;
    let plain_model = EnsembleModel::new(
        map,
        featurizer,
        config,
        vec![round(1, Learner::Logistic(plain))],
    )
    .map_err(e)?;

    // Evaluate round 2 on noise-only test text too, so the key never helps it directly.
    let noise_test = Corpus::new(
        test_c
            .samples()
            .iter()
            .map(|s| LabeledSample::original(s.id, strip_keys(&s.text), s.label))
            .collect(),
        test_c.label_map().clone(),
    )
    .map_err(e)?;
    let recurrent = chained_model
        .evaluate(&test_c, InferenceMode::Recurrent)
        .map_err(e)?
        .accuracy;
    let non_chained = plain_model
        .evaluate(&noise_test, InferenceMode::Recurrent)
        .map_err(e)?
        .accuracy;
    ensure(
        recurrent >= non_chained,
        format!(
            "recurrent {} < non-chained round 2 {}",
            pct(recurrent),
            pct(non_chained)
        ),
    )?;
    Ok(format!(
        "recurrent {} vs non-chained round 2 {}",
        pct(recurrent),
        pct(non_chained)
    ))
}

// Criterion 7 ---------------------------------------------------------------

fn gradient_check() -> Check {
    let e = |e: chainboost::Error| e.to_string();
    let texts = [
        "red apple",
        "green apple pie",
        "red car",
        "fast car",
        "green pie",
    ];
    let labels = vec![0, 0, 1, 1, 2];
    let weights = [0.1, 0.3, 0.2, 0.25, 0.15];
    let featurizer = Featurizer::fit(
        FeaturizerConfig {
            dimension: 1024,
            ..Default::default()
        },
        texts.iter().copied(),
    )
    .map_err(e)?;
    let features: Vec<_> = texts.iter().map(|t| featurizer.transform(t)).collect();
    let examples: Vec<Example<'_>> = (0..5)
        .map(|i| Example {
            text: texts[i],
            features: &features[i],
            chain: None,
        })
        .collect();
    let data = TrainingData::new(examples, labels, 3, featurizer.dimension()).map_err(e)?;
    let mut model = LogisticRegression::zeros(3, featurizer.dimension(), false, 0.01);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let params: Vec<f64> = (0..model.n_parameters())
        .map(|_| rng.gen_range(-0.5..0.5))
        .collect();
    model.set_parameters(&params).map_err(e)?;
    let grad = model.weighted_loss_gradient(&data, &weights).map_err(e)?;
    let h = 1e-5;
    let mut worst = 0f64;
    for j in 0..params.len() {
        let mut p = params.clone();
        p[j] = params[j] + h;
        model.set_parameters(&p).map_err(e)?;
        let up = model.weighted_loss(&data, &weights).map_err(e)?;
        p[j] = params[j] - h;
        model.set_parameters(&p).map_err(e)?;
        let down = model.weighted_loss(&data, &weights).map_err(e)?;
        let numeric = (up - down) / (2.0 * h);
        let rel = (grad[j] - numeric).abs() / grad[j].abs().max(numeric.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    ensure(worst < 1e-5, format!("worst relative error {worst:e}"))?;
    Ok(format!(
        "{} parameters, worst relative error {worst:.1e}",
        params.len()
    ))
}

// Criterion 8 ---------------------------------------------------------------

fn metrics_oracle() -> Check {
    let e = |e: chainboost::Error| e.to_string();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for c in [2usize, 3, 4, 23] {
        for _ in 0..100 {
            let n = rng.gen_range(1..150);
            let truth: Vec<usize> = (0..n).map(|_| rng.gen_range(0..c)).collect();
            let pred: Vec<usize> = truth
                .iter()
                .map(|&t| {
                    if rng.gen_bool(0.5) {
                        t
                    } else {
                        rng.gen_range(0..c)
                    }
                })
                .collect();
            let mut sum = 0.0;
            for k in 0..c {
                let tp = (0..n).filter(|&i| pred[i] == k && truth[i] == k).count() as f64;
                let fp = (0..n).filter(|&i| pred[i] == k && truth[i] != k).count() as f64;
                let fneg = (0..n).filter(|&i| pred[i] != k && truth[i] == k).count() as f64;
                let p = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
                let r = if tp + fneg > 0.0 {
                    tp / (tp + fneg)
                } else {
                    0.0
                };
                sum += if p + r > 0.0 {
                    2.0 * p * r / (p + r)
                } else {
                    0.0
                };
            }
            close(
                macro_f1(&pred, &truth, c).map_err(e)?,
                sum / c as f64,
                1e-12,
                &format!("c={c}"),
            )?;
        }
    }
    let mut truth = vec![0; 60];
    truth.extend([1; 40]);
    let mut pred = vec![0; 50];
    pred.extend([1; 10]);
    pred.extend([0; 5]);
    pred.extend([1; 35]);
    let worked = macro_f1(&pred, &truth, 2).map_err(e)?;
    close(worked, 0.846547, 1e-6, "worked example")?;
    Ok(format!(
        "400 random instances match; worked example {worked:.6}"
    ))
}

// Criterion 9 ---------------------------------------------------------------

fn prompt_goldens() -> Check {
    let e = |e: chainboost::Error| e.to_string();
    let golden_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden");
    let read = |name: &str| {
        std::fs::read_to_string(golden_dir.join(name)).map_err(|err| format!("{name}: {err}"))
    };
    let map = ClassLabelMap::new(["Positive", "Negative"]).map_err(e)?;
    let instruction = PromptTemplate::classification_instruction("SENTIMENT", &map);
    ensure(
        instruction == "Classify the SENTIMENT of the INPUT, and assign an accuracy label from ['Positive', 'Negative'].",
        format!("instruction text: {instruction}"),
    )?;
    let zero = PromptTemplate::new(instruction, &map, vec![]).map_err(e)?;
    let one = zero
        .with_shots(vec![Shot {
            text: "a dull plot".into(),
            label: 1,
        }])
        .map_err(e)?;
    let mut chain = ChainContext::new();
    chain.push(0, 0.12);
    let cases = [
        ("zero_shot.txt", build_prompt(&zero, "fine film", None)),
        (
            "zero_shot_chain.txt",
            build_prompt(&zero, "fine film", Some(&chain)),
        ),
        ("one_shot.txt", build_prompt(&one, "fine film", None)),
        (
            "one_shot_chain.txt",
            build_prompt(&one, "fine film", Some(&chain)),
        ),
    ];
    for (name, got) in &cases {
        ensure(*got == read(name)?, format!("{name} differs"))?;
    }
    let k0 = one.with_shots(vec![]).map_err(e)?;
    ensure(
        build_prompt(&k0, "fine film", Some(&chain)) == cases[1].1,
        "k=0 few-shot differs from zero-shot",
    )?;
    Ok("4 golden files match; k=0 equals zero-shot".into())
}

// Criterion 10 --------------------------------------------------------------

fn sentiment_corpus(n: usize) -> Result<Corpus, String> {
    let samples = (0..n)
        .map(|i| LabeledSample::original(i as u64, format!("review number {i}"), i % 2))
        .collect();
    let map = ClassLabelMap::new(["Positive", "Negative"]).map_err(|e| e.to_string())?;
    Corpus::new(samples, map).map_err(|e| e.to_string())
}

/// Weighted error and unparsable count of one remote round under uniform weights.
fn remote_round(behavior: MockBehavior, corpus: &Corpus) -> Result<(f64, usize), String> {
    let e = |e: chainboost::Error| e.to_string();
    let server = MockServer::start(behavior).map_err(e)?;
    let settings = RemoteLearnerSettings {
        remote: RemoteLearnerConfig {
            endpoint: server.url(),
            timeout_ms: 5_000,
            ..Default::default()
        },
        task: "SENTIMENT".into(),
        ..Default::default()
    };
    let featurizer = Featurizer::fit(FeaturizerConfig::default(), corpus.texts()).map_err(e)?;
    let features: Vec<_> = corpus
        .texts()
        .iter()
        .map(|t| featurizer.transform(t))
        .collect();
    let texts = corpus.texts();
    let examples: Vec<Example<'_>> = texts
        .iter()
        .zip(&features)
        .map(|(t, f)| Example {
            text: t,
            features: f,
            chain: None,
        })
        .collect();
    let data = TrainingData::new(
        examples.clone(),
        corpus.labels(),
        corpus.n_classes(),
        featurizer.dimension(),
    )
    .map_err(e)?;
    let weights = Weights::uniform(corpus.len()).map_err(e)?;
    let learner = LearnerConfig::RemoteLlm(settings)
        .fit(&data, weights.as_slice(), corpus.label_map().names(), 0)
        .map_err(e)?;
    let batch = learner.predict_batch(&examples).map_err(e)?;
    let correct: Vec<bool> = batch
        .predictions
        .iter()
        .zip(corpus.labels())
        .map(|(p, y)| p.label == y)
        .collect();
    Ok((
        weighted_error(&correct, &weights).map_err(e)?,
        batch.unparsable,
    ))
}

fn mock_loop() -> Check {
    let corpus = sentiment_corpus(100)?;
    let (eps_oracle, _) = remote_round(MockBehavior::oracle_for(&corpus), &corpus)?;
    let clamped = eps_oracle.max(EPSILON_FLOOR);
    ensure(clamped <= EPSILON_FLOOR, format!("oracle eps {eps_oracle}"))?;
    let (eps_const, _) = remote_round(MockBehavior::Constant("Positive".into()), &corpus)?;
    close(eps_const, 0.5, 0.02, "constant eps")?;
    let (_, unparsable) = remote_round(MockBehavior::Gibberish, &corpus)?;
    ensure(
        unparsable == corpus.len(),
        format!("unparsable {unparsable} of {}", corpus.len()),
    )?;
    Ok(format!(
        "oracle eps {eps_oracle} (clamped {clamped:e}), constant eps {eps_const}, gibberish unparsable {unparsable}/{}",
        corpus.len()
    ))
}

// Criterion 11 --------------------------------------------------------------

fn cli_determinism() -> Check {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy/config.toml");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut models = Vec::new();
    for run in ["a", "b"] {
        let dir = tmp.path().join(run);
        let out = Command::new(env!("CARGO_BIN_EXE_chainboost"))
            .arg("train")
            .arg(&config)
            .arg("--output-dir")
            .arg(&dir)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(
            out.status.success(),
            format!(
                "train exited {:?}: {}",
                out.status.code(),
                String::from_utf8_lossy(&out.stderr)
            ),
        )?;
        models.push(std::fs::read(dir.join("model.json")).map_err(|e| e.to_string())?);
    }
    ensure(models[0] == models[1], "model files differ")?;
    Ok(format!("two runs, {} identical bytes", models[0].len()))
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let news = news_runs();
    let criteria: Vec<Criterion<'_>> = vec![
        ("SAMME trace matches brute force", Box::new(samme_trace)),
        ("closed forms", Box::new(closed_forms)),
        ("distribution invariants", Box::new(distribution_invariants)),
        (
            "boosting beats a single learner",
            Box::new(|| boosting_improves(&news)),
        ),
        (
            "recurrent vs weighted vote",
            Box::new(|| ablation_direction(&news)),
        ),
        ("chain copy construction", Box::new(chain_copy)),
        ("logistic gradient check", Box::new(gradient_check)),
        ("macro-F1 oracle", Box::new(metrics_oracle)),
        ("prompt golden files", Box::new(prompt_goldens)),
        ("mock endpoint loop", Box::new(mock_loop)),
        ("train determinism via CLI", Box::new(cli_determinism)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
