//! Chat-completions HTTP backend.
//!
//! Request: `{"model", "messages": [{"role", "content"}], "temperature": 0}`.
//! Turns with attached images send `content` as a list of `text` and
//! `image_url` parts; local images are inlined as base64 data URIs. The
//! answer is read from `choices[0].message.content`.

use std::path::Path;
use std::time::Duration;

use base64::Engine as _;
use listrank_core::rerank::{Backend, BackendError, PromptScript};
use serde_json::{json, Value};

/// Environment variable holding the bearer token.
pub const API_KEY_ENV: &str = "RERANK_API_KEY";

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub supports_images: bool,
}

impl HttpConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        HttpConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            timeout: DEFAULT_TIMEOUT,
            supports_images: true,
        }
    }
}

pub struct HttpBackend {
    cfg: HttpConfig,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(cfg: HttpConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpBackend { cfg, agent }
    }
}

fn mime_for(path: &str) -> &'static str {
    let ext = Path::new(path)
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("gif") => "image/gif",
        Some("webp") => "image/webp",
        _ => "application/octet-stream",
    }
}

/// URL for an image reference: remote and data URIs pass through, local
/// files are read and inlined.
pub fn image_url(image_ref: &str) -> Result<String, BackendError> {
    if ["http://", "https://", "data:"]
        .iter()
        .any(|p| image_ref.starts_with(p))
    {
        return Ok(image_ref.into());
    }
    let bytes = std::fs::read(image_ref)
        .map_err(|e| BackendError::Unsupported(format!("cannot read image {image_ref}: {e}")))?;
    let encoded = base64::engine::general_purpose::STANDARD.encode(bytes);
    Ok(format!("data:{};base64,{encoded}", mime_for(image_ref)))
}

/// JSON request body for `prompt`.
pub fn request_body(prompt: &PromptScript, model: &str) -> Result<Value, BackendError> {
    let mut messages = Vec::with_capacity(prompt.turns().len());
    for turn in prompt.turns() {
        let content = if turn.images.is_empty() {
            Value::String(turn.text.clone())
        } else {
            let mut parts = vec![json!({"type": "text", "text": turn.text})];
            for image in &turn.images {
                parts.push(json!({"type": "image_url", "image_url": {"url": image_url(image)?}}));
            }
            Value::Array(parts)
        };
        messages.push(json!({"role": turn.role.as_str(), "content": content}));
    }
    Ok(json!({"model": model, "messages": messages, "temperature": 0}))
}

/// Extracts `choices[0].message.content`.
pub fn parse_response(body: &str) -> Result<String, BackendError> {
    let value: Value = serde_json::from_str(body)
        .map_err(|e| BackendError::InvalidResponse(format!("not JSON: {e}")))?;
    value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_owned)
        .ok_or_else(|| BackendError::InvalidResponse("missing choices[0].message.content".into()))
}

impl Backend for HttpBackend {
    fn complete(&self, prompt: &PromptScript) -> Result<String, BackendError> {
        let body = request_body(prompt, &self.cfg.model)?.to_string();
        let mut req = self
            .agent
            .post(&self.cfg.endpoint)
            .header("Content-Type", "application/json");
        if let Some(key) = &self.cfg.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send(body.as_bytes())
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(BackendError::Status {
                status,
                message: text.chars().take(500).collect(),
            });
        }
        parse_response(&text)
    }

    fn supports_images(&self) -> bool {
        self.cfg.supports_images
    }

    fn tag(&self) -> String {
        format!("http:{}", self.cfg.model)
    }
}
