use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chainboost::dataset::load_corpus;
use chainboost::llm::{MockBehavior, MockServer};
use chainboost::telemetry::{TrainingTelemetry, WEIGHTS_DIR};
use chainboost::{CorpusFormat, EnsembleModel, InferenceMode, MetricsReport, Weights};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;

pub const MODEL_FILE: &str = "model.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const EVAL_DIR: &str = "eval";

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))
}

pub fn train(config_path: &Path, overrides: &[(String, toml::Value)]) -> Result<(), CliError> {
    let config = RunConfig::load(config_path, overrides)?;
    let train_path = &config.data.train;
    let corpus = load_corpus(
        train_path,
        config.format_of(train_path),
        config.data.has_header,
    )?;
    let augmenter = config.augmenter.build()?;
    let outcome = chainboost::train(&corpus, &config.boost, augmenter.as_ref())?;

    let out = &config.output_dir;
    create_dir(out)?;
    let model_path = out.join(MODEL_FILE);
    outcome.model.save(&model_path)?;
    outcome.telemetry.write(out)?;

    let mut evaluations = serde_json::Map::new();
    if let Some(test_path) = &config.data.test {
        let test = load_corpus(
            test_path,
            config.format_of(test_path),
            config.data.has_header,
        )?;
        for mode in [InferenceMode::Recurrent, InferenceMode::WeightedVote] {
            let report = outcome.model.evaluate(&test, mode)?;
            let stem = format!("test_{mode}");
            report.write(&out.join(EVAL_DIR), &stem)?;
            println!(
                "test {mode}: accuracy {:.4} macro_f1 {:.4}",
                report.accuracy, report.macro_f1
            );
            evaluations.insert(
                mode.to_string(),
                json!({"accuracy": report.accuracy, "macro_f1": report.macro_f1, "n_samples": report.n_samples}),
            );
        }
    }

    let manifest = json!({
        "command": "train",
        "chainboost_version": env!("CARGO_PKG_VERSION"),
        "seed": config.boost.seed,
        "effective_config": config,
        "train_samples": corpus.len(),
        "holdout_samples": outcome.telemetry.holdout_size,
        "rounds": outcome.model.rounds().len(),
        "stop_reason": outcome.telemetry.stop_reason,
        "model": MODEL_FILE,
        "telemetry": chainboost::telemetry::TELEMETRY_FILE,
        "weights_dir": WEIGHTS_DIR,
        "test": evaluations,
    });
    let manifest_path = out.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).map_err(chainboost::Error::from)? + "\n";
    fs::write(&manifest_path, text).map_err(|e| chainboost::Error::Io {
        path: manifest_path.clone(),
        source: e,
    })?;
    println!(
        "trained {} rounds on {} samples; model written to {}",
        outcome.model.rounds().len(),
        corpus.len(),
        model_path.display()
    );
    Ok(())
}

pub struct CorpusArgs {
    pub path: PathBuf,
    pub format: Option<CorpusFormat>,
    pub has_header: bool,
}

fn load_model(path: &Path) -> Result<EnsembleModel, CliError> {
    if !path.is_file() {
        return Err(CliError::Config(format!(
            "model file not found: {}",
            path.display()
        )));
    }
    Ok(EnsembleModel::load(path)?)
}

pub fn evaluate(
    model_path: &Path,
    corpus: &CorpusArgs,
    mode: InferenceMode,
    output_dir: Option<&Path>,
) -> Result<(), CliError> {
    let model = load_model(model_path)?;
    let format = corpus
        .format
        .or_else(|| CorpusFormat::from_path(&corpus.path))
        .ok_or_else(|| {
            CliError::Config(format!("cannot infer format of {}", corpus.path.display()))
        })?;
    let data = load_corpus(&corpus.path, format, corpus.has_header)?;
    let report = model.evaluate(&data, mode)?;
    let dir = match output_dir {
        Some(d) => d.to_path_buf(),
        None => model_path.parent().unwrap_or(Path::new(".")).join(EVAL_DIR),
    };
    let stem = format!(
        "{}_{mode}",
        corpus
            .path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("corpus")
    );
    report.write(&dir, &stem)?;
    println!(
        "accuracy {:.4} macro_f1 {:.4}",
        report.accuracy, report.macro_f1
    );
    println!(
        "report written to {}",
        dir.join(format!("{stem}.json")).display()
    );
    Ok(())
}

#[derive(Deserialize)]
struct PredictInput {
    text: String,
    #[serde(default)]
    id: Option<Value>,
}

pub fn predict(
    model_path: &Path,
    input: &Path,
    output: &Path,
    mode: InferenceMode,
) -> Result<(), CliError> {
    let model = load_model(model_path)?;
    let file = File::open(input)
        .map_err(|e| CliError::Config(format!("cannot open {}: {e}", input.display())))?;

    let mut records: Vec<(usize, PredictInput)> = Vec::new();
    let mut failed = 0usize;
    let mut total = 0usize;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| CliError::Config(format!("{}: {e}", input.display())))?;
        total += 1;
        match serde_json::from_str::<PredictInput>(&line) {
            Ok(rec) => records.push((line_no, rec)),
            Err(e) => {
                failed += 1;
                eprintln!(
                    "{}",
                    json!({"error": "malformed_record", "file": input.display().to_string(), "line": line_no, "message": e.to_string()})
                );
            }
        }
    }

    let texts: Vec<&str> = records.iter().map(|(_, r)| r.text.as_str()).collect();
    let predictions = if texts.is_empty() {
        Vec::new()
    } else {
        model.predict_batch(&texts, mode)?
    };
    let names = model.label_map().names();
    let out = File::create(output)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", output.display())))?;
    let mut w = BufWriter::new(out);
    for ((line_no, rec), p) in records.iter().zip(&predictions) {
        let scores: serde_json::Map<String, Value> = names
            .iter()
            .zip(&p.result.scores)
            .map(|(n, s)| (n.clone(), json!(s)))
            .collect();
        let row = json!({
            "line": line_no,
            "id": rec.id,
            "label": names[p.result.label],
            "scores": scores,
            "per_round_labels": p.per_round_labels.iter().map(|&l| names[l].as_str()).collect::<Vec<_>>(),
        });
        writeln!(w, "{row}").map_err(|e| CliError::Config(format!("{}: {e}", output.display())))?;
    }
    w.flush()
        .map_err(|e| CliError::Config(format!("{}: {e}", output.display())))?;
    if failed > 0 {
        return Err(CliError::Partial { failed, total });
    }
    Ok(())
}

pub fn inspect(dir: &Path, show_weights: bool) -> Result<(), CliError> {
    let rounds = TrainingTelemetry::read_rounds(dir)
        .map_err(|e| CliError::Config(format!("no telemetry in {}: {e}", dir.display())))?;
    println!(
        "{:>5}  {:>10}  {:>10}  {:>10}  {:>11}",
        "round", "epsilon", "alpha", "z", "holdout_acc"
    );
    for r in &rounds {
        let holdout = r
            .holdout_accuracy
            .map_or_else(|| "-".to_string(), |a| format!("{a:.4}"));
        println!(
            "{:>5}  {:>10.6}  {:>10.6}  {:>10.6}  {:>11}",
            r.round, r.epsilon, r.alpha, r.z, holdout
        );
    }

    let weights_dir = dir.join(WEIGHTS_DIR);
    let mut snapshot_rounds: Vec<usize> = fs::read_dir(&weights_dir)
        .map_err(|e| {
            CliError::Config(format!(
                "no weight snapshots in {}: {e}",
                weights_dir.display()
            ))
        })?
        .filter_map(|entry| {
            let name = entry.ok()?.file_name().into_string().ok()?;
            name.strip_prefix("round_")?
                .strip_suffix(".csv")?
                .parse()
                .ok()
        })
        .collect();
    snapshot_rounds.sort_unstable();
    if snapshot_rounds.is_empty() {
        return Err(CliError::Config(format!(
            "no weight snapshots in {}",
            weights_dir.display()
        )));
    }

    println!();
    println!(
        "{:>5}  {:>6}  {:>10}  {:>10}",
        "round", "n", "max_weight", "entropy"
    );
    let mut entropies = Vec::new();
    for k in snapshot_rounds {
        let pairs = TrainingTelemetry::read_weights(dir, k)?;
        let w = Weights::new(pairs.iter().map(|&(_, w)| w).collect())?;
        let entropy = w.entropy();
        entropies.push(entropy);
        println!(
            "{:>5}  {:>6}  {:>10.6}  {:>10.6}",
            k,
            w.len(),
            w.max_weight(),
            entropy
        );
        if show_weights {
            let listed: Vec<String> = pairs.iter().map(|(id, w)| format!("{id}:{w:.6}")).collect();
            println!("       {}", listed.join(" "));
        }
    }
    let monotone = entropies.windows(2).all(|p| p[1] <= p[0] + 1e-12);
    println!(
        "entropy non-increasing: {}",
        if monotone { "yes" } else { "no" }
    );
    Ok(())
}

pub fn report(dir: &Path) -> Result<(), CliError> {
    let entries = fs::read_dir(dir)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", dir.display())))?;
    let mut rows: Vec<(String, MetricsReport)> = entries
        .filter_map(|entry| {
            let path = entry.ok()?.path();
            if path.extension()? != "json" {
                return None;
            }
            let text = fs::read_to_string(&path).ok()?;
            let report: MetricsReport = serde_json::from_str(&text).ok()?;
            Some((path.file_stem()?.to_str()?.to_string(), report))
        })
        .collect();
    if rows.is_empty() {
        return Err(CliError::Config(format!(
            "no metrics reports in {}",
            dir.display()
        )));
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(6).max(6);
    println!(
        "{:<width$}  {:>7}  {:>8}  {:>8}",
        "report", "n", "accuracy", "macro_f1"
    );
    for (name, r) in rows {
        println!(
            "{:<width$}  {:>7}  {:>8.4}  {:>8.4}",
            name, r.n_samples, r.accuracy, r.macro_f1
        );
    }
    Ok(())
}

pub struct MockArgs {
    pub addr: String,
    pub behavior: String,
    pub answer: Option<String>,
    pub corpus: Option<CorpusArgs>,
    pub fail_first: usize,
}

pub fn mock_serve(args: MockArgs) -> Result<(), CliError> {
    let behavior = match args.behavior.as_str() {
        "constant" => MockBehavior::Constant(
            args.answer
                .ok_or_else(|| CliError::Config("constant behavior needs --answer".into()))?,
        ),
        "gibberish" => MockBehavior::Gibberish,
        "paraphrase" => MockBehavior::Paraphrase,
        "oracle" => {
            let c = args
                .corpus
                .ok_or_else(|| CliError::Config("oracle behavior needs --corpus".into()))?;
            let format = c
                .format
                .or_else(|| CorpusFormat::from_path(&c.path))
                .ok_or_else(|| {
                    CliError::Config(format!("cannot infer format of {}", c.path.display()))
                })?;
            MockBehavior::oracle_for(&load_corpus(&c.path, format, c.has_header)?)
        }
        other => return Err(CliError::Config(format!("unknown mock behavior `{other}`"))),
    };
    let behavior = if args.fail_first > 0 {
        MockBehavior::Flaky {
            fail_first: args.fail_first,
            then: Box::new(behavior),
        }
    } else {
        behavior
    };
    let server =
        MockServer::bind(&args.addr, behavior).map_err(|e| CliError::Config(e.to_string()))?;
    println!("{}", server.url());
    std::io::stdout().flush().ok();
    server.wait();
    Ok(())
}
