//! `chainboost` command-line driver.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration or usage,
//! 3 model/data incompatibility, 4 partial data failure. Failures print one
//! JSON line on stderr.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use chainboost::{CorpusFormat, InferenceMode};
use clap::{Args, Parser, Subcommand};

use crate::commands::{CorpusArgs, MockArgs};
use crate::error::{CliError, EXIT_CONFIG, EXIT_OK};

#[derive(Parser)]
#[command(
    name = "chainboost",
    version,
    about = "Boosted text classifiers with chained inference"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from a run configuration.
    Train {
        config: PathBuf,
        /// Override `boost.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Override `boost.k_max`.
        #[arg(long)]
        k_max: Option<i64>,
        /// Override `output_dir`.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Override any key, e.g. `--set boost.learner.kind=stump`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
    /// Score a model on a labeled corpus.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        corpus: CorpusFlags,
        #[arg(long, default_value = "recurrent")]
        mode: InferenceMode,
        /// Defaults to `eval/` next to the model.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Label texts from a JSONL file (`{"text": ..., "id": ...}` per line).
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value = "recurrent")]
        mode: InferenceMode,
    },
    /// Print per-round telemetry and weight concentration.
    Inspect {
        dir: PathBuf,
        /// Also list every sample weight of every snapshot.
        #[arg(long)]
        weights: bool,
    },
    /// Tabulate the metrics reports in a directory.
    Report { dir: PathBuf },
    /// Run a scripted completion endpoint until killed.
    MockServe {
        #[arg(long, default_value = "127.0.0.1:8089")]
        addr: String,
        /// constant, oracle, gibberish or paraphrase.
        #[arg(long)]
        behavior: String,
        /// Answer text for `constant`.
        #[arg(long)]
        answer: Option<String>,
        /// Labeled corpus for `oracle`.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        format: Option<CorpusFormat>,
        #[arg(long)]
        no_header: bool,
        /// Fail this many requests with HTTP 500 first.
        #[arg(long, default_value_t = 0)]
        fail_first: usize,
    },
}

#[derive(Args)]
struct CorpusFlags {
    #[arg(long)]
    corpus: PathBuf,
    /// tsv, csv or jsonl; inferred from the extension by default.
    #[arg(long)]
    format: Option<CorpusFormat>,
    /// The corpus file has no header row.
    #[arg(long)]
    no_header: bool,
}

impl From<CorpusFlags> for CorpusArgs {
    fn from(f: CorpusFlags) -> Self {
        CorpusArgs {
            path: f.corpus,
            format: f.format,
            has_header: !f.no_header,
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Train {
            config,
            seed,
            k_max,
            output_dir,
            sets,
        } => {
            let mut overrides = sets
                .iter()
                .map(|s| config::parse_override(s))
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(seed) = seed {
                let seed = i64::try_from(seed)
                    .map_err(|_| CliError::Config("seed must fit in i64".into()))?;
                overrides.push(("boost.seed".into(), toml::Value::Integer(seed)));
            }
            if let Some(k) = k_max {
                overrides.push(("boost.k_max".into(), toml::Value::Integer(k)));
            }
            if let Some(dir) = output_dir {
                let dir = std::path::absolute(&dir).unwrap_or(dir);
                overrides.push((
                    "output_dir".into(),
                    toml::Value::String(dir.display().to_string()),
                ));
            }
            commands::train(&config, &overrides)
        }
        Command::Evaluate {
            model,
            corpus,
            mode,
            output_dir,
        } => commands::evaluate(&model, &corpus.into(), mode, output_dir.as_deref()),
        Command::Predict {
            model,
            input,
            output,
            mode,
        } => commands::predict(&model, &input, &output, mode),
        Command::Inspect { dir, weights } => commands::inspect(&dir, weights),
        Command::Report { dir } => commands::report(&dir),
        Command::MockServe {
            addr,
            behavior,
            answer,
            corpus,
            format,
            no_header,
            fail_first,
        } => commands::mock_serve(MockArgs {
            addr,
            behavior,
            answer,
            corpus: corpus.map(|path| CorpusArgs {
                path,
                format,
                has_header: !no_header,
            }),
            fail_first,
        }),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_OK);
        }
        Err(e) => {
            let message = e.render().to_string();
            let summary: Vec<&str> = message
                .lines()
                .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more"))
                .map(|l| l.trim().trim_start_matches("error: "))
                .filter(|l| !l.is_empty())
                .collect();
            eprintln!("{}", CliError::Config(summary.join(" ")).to_json_line());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.exit_code())
        }
    }
}
