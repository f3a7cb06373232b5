use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{BackendError, ChatBackend, Message};

/// One scripted reply. `match` is a substring of the last message's content;
/// an empty pattern matches everything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockRule {
    #[serde(rename = "match")]
    pub pattern: String,
    #[serde(default)]
    pub reply: String,
    /// Fail instead of replying: `"timeout"` gives [`BackendError::Timeout`],
    /// anything else a transport error with this text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl MockRule {
    pub fn reply(pattern: impl Into<String>, reply: impl Into<String>) -> Self {
        Self { pattern: pattern.into(), reply: reply.into(), error: None }
    }

    pub fn fail(pattern: impl Into<String>, error: impl Into<String>) -> Self {
        Self { pattern: pattern.into(), reply: String::new(), error: Some(error.into()) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MockCall {
    pub messages: Vec<Message>,
    pub temperature: f64,
}

/// Scripted backend: first matching rule wins, every call is logged.
#[derive(Debug, Default)]
pub struct MockBackend {
    rules: Vec<MockRule>,
    calls: Mutex<Vec<MockCall>>,
}

impl MockBackend {
    pub fn new(rules: Vec<MockRule>) -> Self {
        Self { rules, calls: Mutex::new(Vec::new()) }
    }

    /// Parses a fixture: a JSON list of `{match, reply}` rules.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        Ok(Self::new(serde_json::from_str(text)?))
    }

    pub fn from_file(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    /// Fixture covering every orchestrator request, used by demos and tests.
    pub fn demo() -> Self {
        Self::from_json(include_str!("../../assets/mock_backend.json")).expect("bundled mock fixture parses")
    }

    pub fn rules(&self) -> &[MockRule] {
        &self.rules
    }

    pub fn calls(&self) -> Vec<MockCall> {
        self.calls.lock().unwrap().clone()
    }

    pub fn call_count(&self) -> usize {
        self.calls.lock().unwrap().len()
    }
}

impl ChatBackend for MockBackend {
    fn send(&self, messages: &[Message], temperature: f64) -> Result<String, BackendError> {
        self.calls.lock().unwrap().push(MockCall { messages: messages.to_vec(), temperature });
        let last = messages.last().map_or("", |m| m.content.as_str());
        let rule = self
            .rules
            .iter()
            .find(|r| last.contains(&r.pattern))
            .ok_or_else(|| BackendError::Transport("mock: no rule matches the last message".into()))?;
        match rule.error.as_deref() {
            Some("timeout") => Err(BackendError::Timeout),
            Some(e) => Err(BackendError::Transport(e.to_string())),
            None => Ok(rule.reply.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_match_wins_and_calls_are_logged() {
        let m = MockBackend::new(vec![
            MockRule::reply("hello", "one"),
            MockRule::reply("hell", "two"),
            MockRule::fail("down", "timeout"),
        ]);
        assert_eq!(m.send(&[Message::user("hello there")], 0.2).unwrap(), "one");
        assert_eq!(m.send(&[Message::user("hell")], 0.7).unwrap(), "two");
        assert_eq!(m.send(&[Message::user("down")], 0.7), Err(BackendError::Timeout));
        assert!(matches!(m.send(&[Message::user("x")], 0.7), Err(BackendError::Transport(_))));
        let calls = m.calls();
        assert_eq!(calls.len(), 4);
        assert_eq!(calls[1].temperature, 0.7);
    }

    #[test]
    fn fixture_format() {
        let m = MockBackend::from_json(r#"[{"match": "", "reply": "ok"}]"#).unwrap();
        assert_eq!(m.send(&[Message::user("anything")], 0.0).unwrap(), "ok");
    }
}
