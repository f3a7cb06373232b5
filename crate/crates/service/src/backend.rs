//! Chat-completions client over HTTP.

use std::time::Duration;

use serde_json::{json, Value};
use trackmate_core::llm::{BackendError, ChatBackend, Message};

/// Speaks the common chat-completions shape: `{model, messages, temperature}`
/// in, `choices[0].message.content` out.
#[derive(Debug, Clone)]
pub struct HttpBackend {
    agent: ureq::Agent,
    url: String,
    api_key: Option<String>,
    model: String,
}

impl HttpBackend {
    pub fn new(url: impl Into<String>, api_key: Option<String>, model: impl Into<String>, timeout: Duration) -> Self {
        let agent =
            ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build().into();
        Self { agent, url: url.into(), api_key, model: model.into() }
    }

    pub fn request_body(&self, messages: &[Message], temperature: f64) -> Value {
        json!({ "model": self.model, "messages": messages, "temperature": temperature })
    }
}

fn transport(e: ureq::Error) -> BackendError {
    match e {
        ureq::Error::Timeout(_) => BackendError::Timeout,
        other => BackendError::Transport(other.to_string()),
    }
}

/// Pulls the first choice's message content out of a response document.
pub fn reply_content(body: &str) -> Result<String, BackendError> {
    let v: Value = serde_json::from_str(body).map_err(|e| BackendError::Protocol(format!("invalid JSON: {e}")))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_owned)
        .ok_or_else(|| BackendError::Protocol("response has no choices[0].message.content".into()))
}

impl ChatBackend for HttpBackend {
    fn send(&self, messages: &[Message], temperature: f64) -> Result<String, BackendError> {
        let mut req = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req.send_json(self.request_body(messages, temperature)).map_err(transport)?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(transport)?;
        if !(200..300).contains(&status) {
            return Err(BackendError::Status { status, body });
        }
        reply_content(&body)
    }
}
