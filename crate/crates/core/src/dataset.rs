//! Labeled text corpora: loading, validation, splitting and serialization.
//!
//! Three flat formats are read and written: TSV and CSV with two columns
//! (`text`, `label`) and an optional header row, and JSONL with one
//! `{"text": .., "label": ..}` object per line. A versioned JSON container
//! keeps everything, including augmentation provenance.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CORPUS_FORMAT_TAG: &str = "chainboost-corpus";
pub const CORPUS_FORMAT_VERSION: u32 = 1;

/// Ordered, distinct class names. The position of a name is its class index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct ClassLabelMap {
    names: Vec<String>,
}

impl ClassLabelMap {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() < 2 {
            return Err(Error::TooFewClasses { found: names.len() });
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate class name {name:?}"
                )));
            }
        }
        Ok(Self { names })
    }

    /// Number of classes.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

impl TryFrom<Vec<String>> for ClassLabelMap {
    type Error = Error;

    fn try_from(names: Vec<String>) -> Result<Self> {
        Self::new(names)
    }
}

impl From<ClassLabelMap> for Vec<String> {
    fn from(map: ClassLabelMap) -> Self {
        map.names
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Original,
    Augmented,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub id: u64,
    pub text: String,
    pub label: usize,
    pub origin: Origin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<u64>,
}

impl LabeledSample {
    pub fn original(id: u64, text: impl Into<String>, label: usize) -> Self {
        Self {
            id,
            text: text.into(),
            label,
            origin: Origin::Original,
            parent_id: None,
        }
    }

    pub fn augmented(id: u64, text: impl Into<String>, label: usize, parent_id: u64) -> Self {
        Self {
            id,
            text: text.into(),
            label,
            origin: Origin::Augmented,
            parent_id: Some(parent_id),
        }
    }
}

/// An immutable collection of labeled samples over a fixed label map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    samples: Vec<LabeledSample>,
    label_map: ClassLabelMap,
}

impl Corpus {
    /// Validates ids, labels, texts and augmentation provenance.
    pub fn new(samples: Vec<LabeledSample>, label_map: ClassLabelMap) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let c = label_map.len();
        let mut originals = HashSet::with_capacity(samples.len());
        let mut ids = HashSet::with_capacity(samples.len());
        for s in &samples {
            if !ids.insert(s.id) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate sample id {}",
                    s.id
                )));
            }
            if s.label >= c {
                return Err(Error::InvalidArgument(format!(
                    "sample {} has label {} but only {c} classes exist",
                    s.id, s.label
                )));
            }
            if s.text.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "sample {} has empty text",
                    s.id
                )));
            }
            if s.origin == Origin::Original {
                originals.insert(s.id);
            }
        }
        for s in &samples {
            if s.origin == Origin::Augmented {
                match s.parent_id {
                    Some(p) if originals.contains(&p) => {}
                    _ => {
                        return Err(Error::InvalidArgument(format!(
                            "augmented sample {} does not reference an original sample",
                            s.id
                        )))
                    }
                }
            }
        }
        Ok(Self { samples, label_map })
    }

    pub fn samples(&self) -> &[LabeledSample] {
        &self.samples
    }

    pub fn label_map(&self) -> &ClassLabelMap {
        &self.label_map
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.label_map.len()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.samples.iter().map(|s| s.text.as_str()).collect()
    }

    /// Per-class sample counts.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for s in &self.samples {
            counts[s.label] += 1;
        }
        counts
    }

    pub fn max_id(&self) -> u64 {
        self.samples.iter().map(|s| s.id).max().unwrap_or(0)
    }

    /// Only the `origin = original` samples.
    pub fn originals(&self) -> Result<Corpus> {
        let samples = self
            .samples
            .iter()
            .filter(|s| s.origin == Origin::Original)
            .cloned()
            .collect();
        Corpus::new(samples, self.label_map.clone())
    }

    /// Re-express the labels of this corpus in the index space of `target`.
    /// Fails if any class name used here is unknown to `target`.
    pub fn remap_to(&self, target: &ClassLabelMap) -> Result<Corpus> {
        if &self.label_map == target {
            return Ok(self.clone());
        }
        let mut table = Vec::with_capacity(self.n_classes());
        for name in self.label_map.names() {
            match target.index_of(name) {
                Some(i) => table.push(i),
                None => {
                    return Err(Error::LabelMapMismatch(format!(
                        "corpus class {name:?} is not one of the model classes {:?}",
                        target.names()
                    )))
                }
            }
        }
        let samples = self
            .samples
            .iter()
            .map(|s| LabeledSample {
                label: table[s.label],
                ..s.clone()
            })
            .collect();
        Corpus::new(samples, target.clone())
    }
}

/// Flat file formats accepted by [`load_corpus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Tsv,
    Csv,
    Jsonl,
}

impl CorpusFormat {
    /// Guess from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "tsv" | "tab" => Some(Self::Tsv),
            "csv" => Some(Self::Csv),
            "jsonl" | "ndjson" => Some(Self::Jsonl),
            _ => None,
        }
    }
}

impl std::str::FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(Self::Tsv),
            "csv" => Ok(Self::Csv),
            "jsonl" => Ok(Self::Jsonl),
            other => Err(Error::Format(other.to_string())),
        }
    }
}

/// Builds the label map by first appearance while records stream in.
struct LabelInterner {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelInterner {
    fn new() -> Self {
        Self {
            names: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn intern(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        i
    }
}

/// Load a corpus from a TSV/CSV/JSONL file. `has_header` only applies to
/// the delimited formats.
pub fn load_corpus(
    path: impl AsRef<Path>,
    format: CorpusFormat,
    has_header: bool,
) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(BufReader::new(file), format, has_header)
}

pub fn read_corpus<R: Read>(reader: R, format: CorpusFormat, has_header: bool) -> Result<Corpus> {
    let records = match format {
        CorpusFormat::Tsv => read_delimited(reader, b'\t', has_header)?,
        CorpusFormat::Csv => read_delimited(reader, b',', has_header)?,
        CorpusFormat::Jsonl => read_jsonl(reader)?,
    };
    if records.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut interner = LabelInterner::new();
    let mut samples = Vec::with_capacity(records.len());
    for (i, rec) in records.into_iter().enumerate() {
        let label = interner.intern(&rec.label);
        let id = rec.id.unwrap_or(i as u64);
        samples.push(LabeledSample::original(id, rec.text, label));
    }
    let label_map = ClassLabelMap::new(interner.names)?;
    Corpus::new(samples, label_map)
}

struct RawRecord {
    id: Option<u64>,
    text: String,
    label: String,
}

fn read_delimited<R: Read>(reader: R, delimiter: u8, has_header: bool) -> Result<Vec<RawRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(has_header)
        .flexible(true)
        .from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::MalformedRecord {
                line,
                message: e.to_string(),
            }
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() == 1 && rec.get(0).is_some_and(str::is_empty) {
            continue;
        }
        if rec.len() < 2 {
            return Err(Error::MalformedRecord {
                line,
                message: "label field missing".into(),
            });
        }
        if rec.len() > 2 {
            return Err(Error::MalformedRecord {
                line,
                message: format!("expected 2 fields (text, label), found {}", rec.len()),
            });
        }
        let text = rec[0].to_string();
        let label = rec[1].trim().to_string();
        if text.is_empty() {
            return Err(Error::MalformedRecord {
                line,
                message: "empty text".into(),
            });
        }
        if label.is_empty() {
            return Err(Error::MalformedRecord {
                line,
                message: "label field missing".into(),
            });
        }
        out.push(RawRecord {
            id: None,
            text,
            label,
        });
    }
    Ok(out)
}

fn read_jsonl<R: Read>(reader: R) -> Result<Vec<RawRecord>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.map_err(|e| Error::MalformedRecord {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                line: line_no,
                message: e.to_string(),
            })?;
        let malformed = |message: &str| Error::MalformedRecord {
            line: line_no,
            message: message.to_string(),
        };
        let obj = value
            .as_object()
            .ok_or_else(|| malformed("expected a JSON object"))?;
        let text = obj
            .get("text")
            .and_then(|v| v.as_str())
            .ok_or_else(|| malformed("text field missing"))?;
        if text.is_empty() {
            return Err(malformed("empty text"));
        }
        let label = match obj.get("label") {
            Some(serde_json::Value::String(s)) if !s.trim().is_empty() => s.trim().to_string(),
            Some(serde_json::Value::Number(n)) => n.to_string(),
            Some(serde_json::Value::Bool(b)) => b.to_string(),
            _ => return Err(malformed("label field missing")),
        };
        let id = match obj.get("id") {
            None | Some(serde_json::Value::Null) => None,
            Some(v) => Some(
                v.as_u64()
                    .ok_or_else(|| malformed("id must be a nonnegative integer"))?,
            ),
        };
        out.push(RawRecord {
            id,
            text: text.to_string(),
            label,
        });
    }
    Ok(out)
}

/// Write a corpus in a flat format. Augmentation provenance is not kept;
/// use [`write_container`] for that.
pub fn save_corpus(
    corpus: &Corpus,
    path: impl AsRef<Path>,
    format: CorpusFormat,
    header: bool,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_corpus(corpus, BufWriter::new(file), format, header).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn write_corpus<W: Write>(
    corpus: &Corpus,
    mut writer: W,
    format: CorpusFormat,
    header: bool,
) -> Result<()> {
    let names = corpus.label_map().names();
    match format {
        CorpusFormat::Tsv | CorpusFormat::Csv => {
            let delimiter = if format == CorpusFormat::Tsv {
                b'\t'
            } else {
                b','
            };
            let mut wtr = csv::WriterBuilder::new()
                .delimiter(delimiter)
                .from_writer(&mut writer);
            let csv_err = |e: csv::Error| Error::InvalidArgument(e.to_string());
            if header {
                wtr.write_record(["text", "label"]).map_err(csv_err)?;
            }
            for s in corpus.samples() {
                wtr.write_record([s.text.as_str(), names[s.label].as_str()])
                    .map_err(csv_err)?;
            }
            wtr.flush().map_err(|e| Error::io("<writer>", e))?;
        }
        CorpusFormat::Jsonl => {
            for s in corpus.samples() {
                let line = serde_json::json!({
                    "id": s.id,
                    "text": s.text,
                    "label": names[s.label],
                });
                writeln!(writer, "{line}").map_err(|e| Error::io("<writer>", e))?;
            }
        }
    }
    writer.flush().map_err(|e| Error::io("<writer>", e))
}

#[derive(Serialize, Deserialize)]
struct CorpusContainer {
    format: String,
    version: u32,
    corpus: Corpus,
}

/// Versioned JSON container preserving ids, label map and provenance.
pub fn write_container(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let container = CorpusContainer {
        format: CORPUS_FORMAT_TAG.into(),
        version: CORPUS_FORMAT_VERSION,
        corpus: corpus.clone(),
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, &container)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_container(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let container: CorpusContainer = serde_json::from_reader(BufReader::new(file))?;
    if container.format != CORPUS_FORMAT_TAG {
        return Err(Error::Format(format!(
            "not a corpus container: {}",
            container.format
        )));
    }
    if container.version != CORPUS_FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported corpus container version {}",
            container.version
        )));
    }
    // Re-run validation; serde bypasses the constructor.
    let Corpus { samples, label_map } = container.corpus;
    Corpus::new(samples, label_map)
}

/// Split off a per-class holdout of `round(count * fraction)` samples
/// (at least one). Returns `(train, holdout)`; both keep input order.
pub fn stratified_split(
    corpus: &Corpus,
    holdout_fraction: f64,
    seed: u64,
) -> Result<(Corpus, Corpus)> {
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "holdout fraction must lie in (0, 1), got {holdout_fraction}"
        )));
    }
    let c = corpus.n_classes();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); c];
    for (pos, s) in corpus.samples().iter().enumerate() {
        by_class[s.label].push(pos);
    }
    for (class, members) in by_class.iter().enumerate() {
        if members.len() < 2 {
            return Err(Error::ClassTooSmall {
                class: corpus.label_map().names()[class].clone(),
                count: members.len(),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_holdout = vec![false; corpus.len()];
    for members in &mut by_class {
        let n = members.len();
        let take = ((n as f64 * holdout_fraction).round() as usize).clamp(1, n - 1);
        members.shuffle(&mut rng);
        for &pos in &members[..take] {
            in_holdout[pos] = true;
        }
    }
    let (mut train, mut holdout) = (Vec::new(), Vec::new());
    for (pos, s) in corpus.samples().iter().enumerate() {
        if in_holdout[pos] {
            holdout.push(s.clone());
        } else {
            train.push(s.clone());
        }
    }
    Ok((
        Corpus::new(train, corpus.label_map().clone())?,
        Corpus::new(holdout, corpus.label_map().clone())?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n_per_class: usize) -> Corpus {
        let mut samples = Vec::new();
        for i in 0..n_per_class * 2 {
            samples.push(LabeledSample::original(
                i as u64,
                format!("text {i}"),
                i % 2,
            ));
        }
        Corpus::new(samples, ClassLabelMap::new(["pos", "neg"]).unwrap()).unwrap()
    }

    #[test]
    fn jsonl_labels_follow_first_appearance() {
        let data = r#"{"text": "one", "label": "B"}
{"text": "two", "label": "A"}
{"text": "three", "label": "B"}
{"text": "four", "label": "A"}
"#;
        let corpus = read_corpus(data.as_bytes(), CorpusFormat::Jsonl, false).unwrap();
        assert_eq!(
            corpus.label_map().names(),
            &["B".to_string(), "A".to_string()]
        );
        assert_eq!(corpus.labels(), vec![0, 1, 0, 1]);
    }

    #[test]
    fn single_class_file_is_rejected() {
        let err = read_corpus(
            "good movie\tPositive\n".as_bytes(),
            CorpusFormat::Tsv,
            false,
        )
        .unwrap_err();
        assert!(matches!(err, Error::TooFewClasses { found: 1 }));
        assert!(err.to_string().contains("fewer than 2 classes"));
    }

    #[test]
    fn empty_file_is_rejected() {
        let err = read_corpus("".as_bytes(), CorpusFormat::Csv, true).unwrap_err();
        assert!(matches!(err, Error::EmptyCorpus));
    }

    #[test]
    fn missing_label_reports_line() {
        let data = "text,label\ngood,pos\nbad\n";
        let err = read_corpus(data.as_bytes(), CorpusFormat::Csv, true).unwrap_err();
        match err {
            Error::MalformedRecord { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("label"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_json_reports_line() {
        let data = "{\"text\": \"a\", \"label\": \"x\"}\n{not json}\n";
        let err = read_corpus(data.as_bytes(), CorpusFormat::Jsonl, false).unwrap_err();
        assert!(matches!(err, Error::MalformedRecord { line: 2, .. }));
    }

    #[test]
    fn csv_quoting_round_trips() {
        let data = "\"hello, \"\"world\"\"\",greeting\nbye,farewell\n";
        let corpus = read_corpus(data.as_bytes(), CorpusFormat::Csv, false).unwrap();
        assert_eq!(corpus.samples()[0].text, "hello, \"world\"");
        let mut buf = Vec::new();
        write_corpus(&corpus, &mut buf, CorpusFormat::Csv, false).unwrap();
        let again = read_corpus(buf.as_slice(), CorpusFormat::Csv, false).unwrap();
        assert_eq!(again, corpus);
    }

    #[test]
    fn split_counts_per_class() {
        let corpus = toy(50);
        let (train, holdout) = stratified_split(&corpus, 0.2, 7).unwrap();
        assert_eq!(holdout.class_counts(), vec![10, 10]);
        assert_eq!(train.class_counts(), vec![40, 40]);
    }

    #[test]
    fn split_half_of_four() {
        let corpus = toy(2);
        let (train, holdout) = stratified_split(&corpus, 0.5, 1).unwrap();
        assert_eq!(holdout.class_counts(), vec![1, 1]);
        assert_eq!(train.len(), 2);
    }

    #[test]
    fn split_is_deterministic() {
        let corpus = toy(30);
        let a = stratified_split(&corpus, 0.3, 99).unwrap();
        let b = stratified_split(&corpus, 0.3, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn split_rejects_singleton_class() {
        let samples = vec![
            LabeledSample::original(0, "a", 0),
            LabeledSample::original(1, "b", 0),
            LabeledSample::original(2, "c", 1),
        ];
        let corpus = Corpus::new(samples, ClassLabelMap::new(["x", "y"]).unwrap()).unwrap();
        assert!(matches!(
            stratified_split(&corpus, 0.5, 0),
            Err(Error::ClassTooSmall { count: 1, .. })
        ));
    }

    #[test]
    fn augmented_needs_original_parent() {
        let samples = vec![
            LabeledSample::original(0, "a", 0),
            LabeledSample::augmented(1, "a'", 0, 5),
        ];
        assert!(Corpus::new(samples, ClassLabelMap::new(["x", "y"]).unwrap()).is_err());
    }

    #[test]
    fn remap_rejects_unknown_class() {
        let corpus = toy(2);
        let target = ClassLabelMap::new(["neg", "pos", "other"]).unwrap();
        let remapped = corpus.remap_to(&target).unwrap();
        assert_eq!(remapped.samples()[0].label, 1);
        let narrow = ClassLabelMap::new(["pos", "zzz"]).unwrap();
        assert!(matches!(
            corpus.remap_to(&narrow),
            Err(Error::LabelMapMismatch(_))
        ));
    }
}
