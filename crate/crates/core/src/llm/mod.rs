//! Prompt pathway: prompt construction, label parsing, a completion-API
//! learner and a scripted mock endpoint.

mod client;
mod learner;
mod mock;
mod parse;
mod prompt;

pub use client::{
    Choice, CompletionClient, CompletionRequest, CompletionResponse, RemoteLearnerConfig,
    DEFAULT_API_KEY_ENV,
};
pub use learner::{RemoteLearner, RemoteLearnerSettings, ShotSelection};
pub use mock::{MockBehavior, MockServer, GIBBERISH};
pub use parse::parse_label;
pub use prompt::{
    build_prompt, escape_text, extract_input, label_list, unescape_text, PromptTemplate, Shot,
    MAX_SHOTS,
};
