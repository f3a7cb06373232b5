use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    build_system_prompt, execute_got, score_track, BackendError, ChatBackend, GotError, Message, PromptTemplate,
    RubricScores, ScoreError, ThoughtGraph, CREATIVE_TEMPERATURE,
};
use crate::report::{render_report, MusicReport};

/// The user turn that asks for the first round of feedback.
pub const OPENING_REQUEST: &str = "Give me your scores with a short justification for each category, then \
your most important improvement suggestions for this track.";

const FALLBACK_QUESTION: &str = "Which part of the track do you want to work on first?";

/// One conversation about one report.
///
/// `history` starts with the system prompt and the report turn; after that it
/// alternates user and assistant messages and is only ever appended to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatSession {
    pub id: String,
    pub report: MusicReport,
    pub system_prompt: String,
    pub history: Vec<Message>,
    pub scores: Option<RubricScores>,
}

impl ChatSession {
    /// A session with just the system prompt and the report turn.
    pub fn new(id: impl Into<String>, report: MusicReport, template: &PromptTemplate, report_turn: String) -> Self {
        let system_prompt = build_system_prompt(&report, template);
        Self {
            id: id.into(),
            history: vec![Message::system(system_prompt.clone()), Message::user(report_turn)],
            report,
            system_prompt,
            scores: None,
        }
    }

    /// Messages exchanged after the opening system and report turns.
    pub fn conversation(&self) -> &[Message] {
        &self.history[2.min(self.history.len())..]
    }
}

/// Sends the full history plus `text`; on success appends both and returns
/// the reply. On failure the history is untouched.
pub fn chat_turn(session: &mut ChatSession, text: &str, backend: &dyn ChatBackend) -> Result<String, BackendError> {
    let mut messages = session.history.clone();
    messages.push(Message::user(text));
    let reply = backend.send(&messages, CREATIVE_TEMPERATURE)?;
    messages.push(Message::assistant(reply.clone()));
    session.history = messages;
    Ok(reply)
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("scoring failed: {0}")]
    Score(#[from] ScoreError),
    #[error("thought graph failed: {0}")]
    Got(#[from] GotError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

impl SessionError {
    /// True when the failure came from the backend rather than from a reply
    /// that could not be parsed or a bad graph.
    pub fn is_backend(&self) -> bool {
        matches!(
            self,
            SessionError::Backend(_)
                | SessionError::Score(ScoreError::Backend(_))
                | SessionError::Got(GotError::Backend { .. })
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenedSession {
    pub session: ChatSession,
    /// The first assistant message; always ends with a question.
    pub opening: String,
    pub score_retries: u32,
    /// The executed graph, when one was supplied.
    pub graph: Option<ThoughtGraph>,
}

fn report_turn(scores: &RubricScores, notes: Option<&str>) -> String {
    let mut t = String::from("My track's analysis report is in your instructions. Your scores from a first listen:\n");
    for c in scores.iter() {
        t.push_str(&format!("- {}: {}/10. {}\n", c.category, c.score, c.justification));
    }
    if let Some(n) = notes {
        t.push_str("\nYour step-by-step notes on how the instruments shape the emotion:\n");
        t.push_str(n.trim_end());
        t.push('\n');
    }
    t
}

/// Scores the report, runs the thought graph (if given) over it, and asks for
/// the opening feedback message. Nothing is returned unless every call
/// succeeds.
///
/// When the opening reply does not end with a question, a generic follow-up
/// question is appended so the producer always has a prompt to answer.
pub fn open_session(
    id: impl Into<String>,
    report: MusicReport,
    template: &PromptTemplate,
    graph: Option<&ThoughtGraph>,
    backend: &dyn ChatBackend,
) -> Result<OpenedSession, SessionError> {
    let scored = score_track(&report, template, backend)?;
    let graph = match graph {
        Some(g) => {
            let mut g = g.clone();
            execute_got(&mut g, &render_report(&report), backend)?;
            Some(g)
        }
        None => None,
    };
    let notes = graph.as_ref().and_then(ThoughtGraph::conclusion);
    let turn = report_turn(&scored.scores, notes.as_deref());
    let mut session = ChatSession::new(id, report, template, turn);
    session.scores = Some(scored.scores);

    let mut opening = chat_turn(&mut session, OPENING_REQUEST, backend)?;
    if !opening.trim_end().ends_with('?') {
        opening = format!("{}\n\n{FALLBACK_QUESTION}", opening.trim_end());
        session.history.last_mut().unwrap().content = opening.clone();
    }
    Ok(OpenedSession { session, opening, score_retries: scored.retries, graph })
}
