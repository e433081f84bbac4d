//! Blocking client for completion-style endpoints.
//!
//! Request: `{"model", "prompt", "max_tokens", "temperature"}` (learner) or
//! `{"prompt", "n"}` (augmenter). Response: `{"choices": [{"text"}, ...]}`.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable holding the bearer token for remote endpoints.
pub const DEFAULT_API_KEY_ENV: &str = "CHAINBOOST_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RemoteLearnerConfig {
    pub endpoint: String,
    pub model: String,
    pub timeout_ms: u64,
    pub retries: u32,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Upper bound on concurrent requests.
    pub max_in_flight: usize,
    pub api_key_env: String,
}

impl Default for RemoteLearnerConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://127.0.0.1:8080/v1/completions".into(),
            model: "default".into(),
            timeout_ms: 30_000,
            retries: 2,
            temperature: 0.0,
            max_tokens: 16,
            max_in_flight: 4,
            api_key_env: DEFAULT_API_KEY_ENV.into(),
        }
    }
}

impl RemoteLearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.timeout_ms == 0 {
            return Err(Error::InvalidArgument("timeout must be > 0".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if self.max_in_flight == 0 {
            return Err(Error::InvalidArgument("max_in_flight must be >= 1".into()));
        }
        if self.endpoint.is_empty() {
            return Err(Error::InvalidArgument("endpoint is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompletionRequest {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    pub prompt: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Choice {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub choices: Vec<Choice>,
}

#[derive(Debug, Clone)]
pub struct CompletionClient {
    agent: ureq::Agent,
    endpoint: String,
    retries: u32,
    api_key: Option<String>,
}

impl CompletionClient {
    pub fn new(
        endpoint: impl Into<String>,
        timeout: Duration,
        retries: u32,
        api_key_env: Option<&str>,
    ) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        let api_key = api_key_env
            .and_then(|var| std::env::var(var).ok())
            .filter(|k| !k.is_empty());
        Self {
            agent,
            endpoint: endpoint.into(),
            retries,
            api_key,
        }
    }

    pub fn from_config(config: &RemoteLearnerConfig) -> Self {
        Self::new(
            config.endpoint.clone(),
            Duration::from_millis(config.timeout_ms),
            config.retries,
            Some(&config.api_key_env),
        )
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    /// POST with up to `retries` additional attempts on failure.
    pub fn send(&self, request: &CompletionRequest) -> Result<CompletionResponse> {
        let mut last_err = String::new();
        for attempt in 0..=self.retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(20 * u64::from(attempt)));
            }
            match self.send_once(request) {
                Ok(r) => return Ok(r),
                Err(e) => {
                    log::debug!("attempt {} to {} failed: {e}", attempt + 1, self.endpoint);
                    last_err = e;
                }
            }
        }
        Err(Error::Remote(format!(
            "{} failed after {} attempts: {last_err}",
            self.endpoint,
            self.retries + 1
        )))
    }

    fn send_once(
        &self,
        request: &CompletionRequest,
    ) -> std::result::Result<CompletionResponse, String> {
        let mut req = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req.send_json(request).map_err(|e| e.to_string())?;
        resp.body_mut()
            .read_json::<CompletionResponse>()
            .map_err(|e| e.to_string())
    }

    /// Text of the first choice.
    pub fn complete(&self, config: &RemoteLearnerConfig, prompt: &str) -> Result<String> {
        let request = CompletionRequest {
            model: Some(config.model.clone()),
            prompt: prompt.to_string(),
            max_tokens: Some(config.max_tokens),
            temperature: Some(config.temperature),
            n: None,
        };
        let response = self.send(&request)?;
        Ok(response
            .choices
            .into_iter()
            .next()
            .map(|c| c.text)
            .unwrap_or_default())
    }
}
