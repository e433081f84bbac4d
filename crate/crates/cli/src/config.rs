//! Run configuration: a TOML file, optionally patched by `--set key=value`
//! overrides, validated before any work starts.

use std::path::{Path, PathBuf};
use std::time::Duration;

use chainboost::augment::{perturbation_augmenter, remote_augmenter, DEFAULT_AUGMENT_TEMPLATE};
use chainboost::{Augmenter, BoostConfig, CorpusFormat};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub data: DataConfig,
    #[serde(default)]
    pub boost: BoostConfig,
    #[serde(default)]
    pub augmenter: AugmenterConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub train: PathBuf,
    /// Scored with both inference modes after training, if present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
    /// Inferred from the file extension when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<CorpusFormat>,
    #[serde(default = "default_true")]
    pub has_header: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AugmenterConfig {
    /// Token dropout and adjacent swaps.
    Perturbation {
        #[serde(default = "default_rate")]
        dropout: f64,
        #[serde(default = "default_rate")]
        swap: f64,
    },
    /// Paraphrases from a completion endpoint, perturbation as fallback.
    Remote {
        endpoint: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        template: Option<String>,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
        #[serde(default = "default_retries")]
        retries: u32,
        #[serde(default = "default_in_flight")]
        max_in_flight: usize,
    },
}

fn default_rate() -> f64 {
    0.1
}

fn default_timeout_ms() -> u64 {
    30_000
}

fn default_retries() -> u32 {
    2
}

fn default_in_flight() -> usize {
    4
}

impl Default for AugmenterConfig {
    fn default() -> Self {
        AugmenterConfig::Perturbation {
            dropout: default_rate(),
            swap: default_rate(),
        }
    }
}

impl AugmenterConfig {
    pub fn build(&self) -> Result<Box<dyn Augmenter>, CliError> {
        match self {
            AugmenterConfig::Perturbation { dropout, swap } => Ok(Box::new(
                perturbation_augmenter(*dropout, *swap).map_err(CliError::config)?,
            )),
            AugmenterConfig::Remote {
                endpoint,
                template,
                timeout_ms,
                retries,
                max_in_flight,
            } => {
                let timeout = Duration::from_millis(*timeout_ms);
                let template = template.as_deref().unwrap_or(DEFAULT_AUGMENT_TEMPLATE);
                let aug = remote_augmenter(endpoint, template, timeout)
                    .map_err(CliError::config)?
                    .with_retries(*retries, timeout)
                    .with_max_in_flight(*max_in_flight);
                Ok(Box::new(aug))
            }
        }
    }
}

impl RunConfig {
    /// Read `path`, apply `overrides` (`dotted.key=toml_value`), resolve
    /// relative paths against the config file's directory and validate.
    pub fn load(path: &Path, overrides: &[(String, toml::Value)]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut table: toml::Table = text
            .parse()
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        for (key, value) in overrides {
            apply_override(&mut table, key, value.clone())?;
        }
        let mut config: RunConfig = table.try_into().map_err(|e: toml::de::Error| {
            CliError::Config(format!("{}: {}", path.display(), e.message()))
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        fix(&mut self.data.train);
        if let Some(t) = self.data.test.as_mut() {
            fix(t);
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.boost.validate().map_err(CliError::config)?;
        for p in std::iter::once(&self.data.train).chain(self.data.test.as_ref()) {
            if !p.is_file() {
                return Err(CliError::Config(format!(
                    "data file not found: {}",
                    p.display()
                )));
            }
            if self.data.format.is_none() && CorpusFormat::from_path(p).is_none() {
                return Err(CliError::Config(format!(
                    "cannot infer format of {}; set data.format",
                    p.display()
                )));
            }
        }
        self.augmenter.build().map(|_| ())
    }

    pub fn format_of(&self, path: &Path) -> CorpusFormat {
        self.data
            .format
            .or_else(|| CorpusFormat::from_path(path))
            .unwrap_or(CorpusFormat::Tsv)
    }
}

/// Split `a.b.c=value`, where `value` is TOML (`7`, `true`, `"text"`). Bare
/// words that do not parse as TOML are taken as strings.
pub fn parse_override(arg: &str) -> Result<(String, toml::Value), CliError> {
    let (key, raw) = arg
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{arg}` is not key=value")))?;
    Ok((key.trim().to_string(), parse_value(raw.trim())))
}

/// Set the dotted `key` in `table`, creating intermediate tables.
pub fn apply_override(
    table: &mut toml::Table,
    key: &str,
    value: toml::Value,
) -> Result<(), CliError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!(
            "override key `{key}` is malformed"
        )));
    }
    let (last, parents) = parts.split_last().expect("split yields at least one part");
    let mut cursor = table;
    for p in parents {
        let entry = cursor
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override `{key}`: `{p}` is not a table")))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
