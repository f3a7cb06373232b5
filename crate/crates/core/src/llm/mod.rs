//! Producer-feedback orchestration over a pluggable chat backend.

mod got;
mod mock;
mod prompt;
mod refine;
mod scoring;
mod session;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use got::{execute_got, music_feedback_graph, GotError, GraphError, NodeSpec, ThoughtGraph, Transformation};
pub use mock::{MockBackend, MockCall, MockRule};
pub use prompt::{build_system_prompt, Persona, PromptTemplate, PERSONA_BLOCK};
pub use refine::{refine_report, Refinement, EVALUATION_CRITERIA};
pub use scoring::{parse_scores, score_track, Category, CategoryScore, RubricScores, ScoreError, ScoreOutcome};
pub use session::{chat_turn, open_session, ChatSession, OpenedSession, SessionError, OPENING_REQUEST};

/// Sampling temperature for judgments: scoring, evaluation, aggregation and refinement.
pub const JUDGE_TEMPERATURE: f64 = 0.2;
/// Sampling temperature for generate nodes and free conversation.
pub const CREATIVE_TEMPERATURE: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: Role::Assistant, content: content.into() }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("backend timed out")]
    Timeout,
    #[error("backend transport failure: {0}")]
    Transport(String),
    #[error("backend returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed backend response: {0}")]
    Protocol(String),
}

/// A stateless chat-completion endpoint. Everything the model should see
/// travels in `messages`.
pub trait ChatBackend: Send + Sync {
    fn send(&self, messages: &[Message], temperature: f64) -> Result<String, BackendError>;
}

impl<B: ChatBackend + ?Sized> ChatBackend for &B {
    fn send(&self, messages: &[Message], temperature: f64) -> Result<String, BackendError> {
        (**self).send(messages, temperature)
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for Box<B> {
    fn send(&self, messages: &[Message], temperature: f64) -> Result<String, BackendError> {
        (**self).send(messages, temperature)
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for std::sync::Arc<B> {
    fn send(&self, messages: &[Message], temperature: f64) -> Result<String, BackendError> {
        (**self).send(messages, temperature)
    }
}
