//! Chat-completion transport.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

/// Most images a single prompt may carry.
pub const MAX_IMAGES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub temperature: f64,
    pub top_p: f64,
    pub top_k: u32,
    pub max_new_tokens: u32,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            temperature: 0.7,
            top_p: 0.8,
            top_k: 20,
            max_new_tokens: 6400,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChatError {
    #[error("{0} images exceed the limit of {MAX_IMAGES}")]
    TooManyImages(usize),
    #[error("chat transport failed: {0}")]
    Transport(String),
    #[error("chat endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed chat response: {0}")]
    Malformed(String),
}

/// Anything that can answer a prompt, optionally with image locators.
pub trait ChatBackend: Send + Sync {
    fn id(&self) -> String;
    fn complete(&self, prompt: &str, images: &[String], params: &GenerationParams) -> Result<String, ChatError>;
}

/// Send one prompt. The image limit is checked here so no backend ever sees
/// an oversized request.
pub fn chat(
    backend: &dyn ChatBackend,
    prompt: &str,
    images: &[String],
    params: &GenerationParams,
) -> Result<String, ChatError> {
    if images.len() > MAX_IMAGES {
        return Err(ChatError::TooManyImages(images.len()));
    }
    backend.complete(prompt, images, params)
}

/// Client for an OpenAI-style `/chat/completions` endpoint.
pub struct HttpChatClient {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    http: reqwest::blocking::Client,
    backoff: Duration,
}

impl HttpChatClient {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, api_key: Option<String>) -> Result<Self, ChatError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(300))
            .build()
            .map_err(|e| ChatError::Transport(e.to_string()))?;
        Ok(HttpChatClient {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key,
            http,
            backoff: Duration::from_millis(500),
        })
    }

    /// Reads `LLM_ENDPOINT`, `LLM_MODEL` and `LLM_API_KEY`. `None` when no
    /// endpoint is configured.
    pub fn from_env() -> Option<Result<Self, ChatError>> {
        let endpoint = std::env::var("LLM_ENDPOINT").ok().filter(|s| !s.is_empty())?;
        let model = std::env::var("LLM_MODEL").unwrap_or_default();
        let key = std::env::var("LLM_API_KEY").ok().filter(|s| !s.is_empty());
        Some(Self::new(endpoint, model, key))
    }

    pub fn with_model(mut self, model: impl Into<String>) -> Self {
        self.model = model.into();
        self
    }

    /// Delay before the single retry; doubled for every further attempt.
    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    pub fn request_body(&self, prompt: &str, images: &[String], params: &GenerationParams) -> Value {
        let mut content = vec![json!({"type": "text", "text": prompt})];
        for url in images {
            content.push(json!({"type": "image_url", "image_url": {"url": url}}));
        }
        json!({
            "model": self.model,
            "messages": [{"role": "user", "content": content}],
            "temperature": params.temperature,
            "top_p": params.top_p,
            "top_k": params.top_k,
            "max_tokens": params.max_new_tokens,
        })
    }

    fn send(&self, body: &Value) -> Result<String, ChatError> {
        let mut req = self.http.post(&self.endpoint).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| ChatError::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| ChatError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(ChatError::Status {
                status: status.as_u16(),
                body: text.chars().take(500).collect(),
            });
        }
        let v: Value = serde_json::from_str(&text).map_err(|e| ChatError::Malformed(e.to_string()))?;
        extract_text(&v).ok_or_else(|| ChatError::Malformed("no choices[0].message.content".into()))
    }
}

fn retryable(e: &ChatError) -> bool {
    match e {
        ChatError::Transport(_) => true,
        ChatError::Status { status, .. } => *status == 429 || *status >= 500,
        _ => false,
    }
}

/// `choices[0].message.content`, either a string or a list of text parts.
fn extract_text(v: &Value) -> Option<String> {
    let content = v.get("choices")?.get(0)?.get("message")?.get("content")?;
    match content {
        Value::String(s) => Some(s.clone()),
        Value::Array(parts) => Some(
            parts
                .iter()
                .filter_map(|p| p.get("text").and_then(Value::as_str))
                .collect::<Vec<_>>()
                .join(""),
        ),
        _ => None,
    }
}

impl ChatBackend for HttpChatClient {
    fn id(&self) -> String {
        if self.model.is_empty() {
            self.endpoint.clone()
        } else {
            self.model.clone()
        }
    }

    fn complete(&self, prompt: &str, images: &[String], params: &GenerationParams) -> Result<String, ChatError> {
        let body = self.request_body(prompt, images, params);
        match self.send(&body) {
            Err(e) if retryable(&e) => {
                log::warn!("chat request failed ({e}); retrying once");
                std::thread::sleep(self.backoff);
                self.send(&body)
            }
            other => other,
        }
    }
}
