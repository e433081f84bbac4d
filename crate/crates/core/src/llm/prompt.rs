//! Prompt construction.
//!
//! Layout, every line terminated by `\n`:
//!
//! ```text
//! <instruction>
//!
//! EXAMPLE INPUT: <shot text>        (one block per demonstration,
//! EXAMPLE LABEL: <shot label>        each preceded by a blank line)
//!
//! INPUT: <text>
//! PREVIOUS PREDICTION 1: <label> (ERROR RATE: 0.1200)   (one line per
//! PREVIOUS PREDICTION 2: ...                              chain entry)
//! ```
//!
//! Texts are escaped (`\` to `\\`, newline to `\n`, carriage return to `\r`)
//! so each occupies exactly one line.

use serde::{Deserialize, Serialize};

use crate::dataset::ClassLabelMap;
use crate::ensemble::ChainContext;
use crate::error::{Error, Result};

pub const INPUT_PREFIX: &str = "INPUT: ";
pub const SHOT_INPUT_PREFIX: &str = "EXAMPLE INPUT: ";
pub const SHOT_LABEL_PREFIX: &str = "EXAMPLE LABEL: ";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shot {
    pub text: String,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    instruction: String,
    label_names: Vec<String>,
    shots: Vec<Shot>,
}

pub const MAX_SHOTS: usize = 10;

impl PromptTemplate {
    pub fn new(
        instruction: impl Into<String>,
        label_map: &ClassLabelMap,
        shots: Vec<Shot>,
    ) -> Result<Self> {
        let instruction = instruction.into();
        if instruction.trim().is_empty() {
            return Err(Error::InvalidArgument("prompt instruction is empty".into()));
        }
        if shots.len() > MAX_SHOTS {
            return Err(Error::InvalidArgument(format!(
                "at most {MAX_SHOTS} demonstrations are supported, got {}",
                shots.len()
            )));
        }
        if let Some(s) = shots.iter().find(|s| s.label >= label_map.len()) {
            return Err(Error::InvalidArgument(format!(
                "demonstration label {} out of range",
                s.label
            )));
        }
        Ok(Self {
            instruction,
            label_names: label_map.names().to_vec(),
            shots,
        })
    }

    /// `Classify the <TASK> of the INPUT, and assign an accuracy label from ['A', 'B'].`
    pub fn classification_instruction(task: &str, label_map: &ClassLabelMap) -> String {
        format!(
            "Classify the {task} of the INPUT, and assign an accuracy label from {}.",
            label_list(label_map.names())
        )
    }

    pub fn instruction(&self) -> &str {
        &self.instruction
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn shots(&self) -> &[Shot] {
        &self.shots
    }

    pub fn with_shots(&self, shots: Vec<Shot>) -> Result<Self> {
        let map = ClassLabelMap::new(self.label_names.clone())?;
        Self::new(self.instruction.clone(), &map, shots)
    }

    fn label_name(&self, index: usize) -> String {
        self.label_names
            .get(index)
            .cloned()
            .unwrap_or_else(|| format!("#{index}"))
    }
}

/// `['A', 'B']`.
pub fn label_list(names: &[String]) -> String {
    let quoted: Vec<String> = names.iter().map(|n| format!("'{n}'")).collect();
    format!("[{}]", quoted.join(", "))
}

pub fn escape_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(ch) = chars.next() {
        if ch != '\\' {
            out.push(ch);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

pub fn build_prompt(template: &PromptTemplate, text: &str, chain: Option<&ChainContext>) -> String {
    let mut out = String::new();
    out.push_str(&template.instruction);
    out.push('\n');
    for shot in &template.shots {
        out.push('\n');
        out.push_str(SHOT_INPUT_PREFIX);
        out.push_str(&escape_text(&shot.text));
        out.push('\n');
        out.push_str(SHOT_LABEL_PREFIX);
        out.push_str(&template.label_name(shot.label));
        out.push('\n');
    }
    out.push('\n');
    out.push_str(INPUT_PREFIX);
    out.push_str(&escape_text(text));
    out.push('\n');
    if let Some(chain) = chain {
        for (j, entry) in chain.entries().iter().enumerate() {
            out.push_str(&format!(
                "PREVIOUS PREDICTION {}: {} (ERROR RATE: {:.4})\n",
                j + 1,
                template.label_name(entry.label),
                entry.epsilon
            ));
        }
    }
    out
}

/// The `INPUT:` line of a prompt built by [`build_prompt`], unescaped.
pub fn extract_input(prompt: &str) -> Option<String> {
    prompt
        .lines()
        .find_map(|l| l.strip_prefix(INPUT_PREFIX))
        .map(unescape_text)
}
