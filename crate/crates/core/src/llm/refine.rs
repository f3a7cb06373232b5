use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{BackendError, ChatBackend, Message, CREATIVE_TEMPERATURE, JUDGE_TEMPERATURE};
use crate::report::{build_report, render_report, AnalysisBundle, MusicReport};

/// What the evaluator ranks interpretations by.
pub const EVALUATION_CRITERIA: &str = "clarity, accuracy, and relevance";

const DEPTHS: [u8; 3] = [1, 2, 3];
const FALLBACK_DEPTH: u8 = 3;

const INTERPRETER_SYSTEM: &str = "I am a music producer explaining an analysis report to the musician who \
made the track. I interpret the numbers; I do not just repeat them.";

const EVALUATOR_SYSTEM: &str = "I am an evaluator comparing several interpretations of the same track \
analysis. I judge them only on the text I am shown.";

static DEPTH_TOKEN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"DEPTH\s*:\s*([1-3])\b").unwrap());

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub report: MusicReport,
    pub interpretation: String,
    pub depth: u8,
    /// True when the evaluator named no depth and the fallback was used.
    pub defaulted: bool,
    /// One interpretation per depth, shallowest first.
    pub interpretations: Vec<String>,
}

/// Builds the report at every depth, has the backend interpret each one, then
/// asks an evaluator call to pick the most insightful. Exactly four calls.
///
/// If the evaluator reply names no `DEPTH:n` token, depth 3 is returned and
/// `defaulted` is set.
pub fn refine_report(bundle: &AnalysisBundle, backend: &dyn ChatBackend) -> Result<Refinement, BackendError> {
    let mut reports = Vec::with_capacity(DEPTHS.len());
    let mut interpretations = Vec::with_capacity(DEPTHS.len());
    for d in DEPTHS {
        let report = build_report(bundle, d);
        let request = format!(
            "Interpret this analysis of my track for me (report depth {d}). Tell me what it says about the \
chords, rhythm, structure and emotion of the track.\n\n{}",
            render_report(&report)
        );
        let reply =
            backend.send(&[Message::system(INTERPRETER_SYSTEM), Message::user(request)], CREATIVE_TEMPERATURE)?;
        reports.push(report);
        interpretations.push(reply);
    }

    let mut request = format!(
        "Here are {} interpretations of the same track, one per report depth. Evaluate them for {EVALUATION_CRITERIA} \
and select the most insightful one for the musician. Answer with the token DEPTH:<n> for your choice, \
then one sentence explaining it.",
        DEPTHS.len()
    );
    for (d, text) in DEPTHS.iter().zip(&interpretations) {
        request.push_str(&format!("\n\n=== DEPTH:{d} ===\n{}", text.trim_end()));
    }
    let verdict = backend.send(&[Message::system(EVALUATOR_SYSTEM), Message::user(request)], JUDGE_TEMPERATURE)?;

    let chosen = DEPTH_TOKEN.captures(&verdict).and_then(|c| c[1].parse::<u8>().ok());
    let depth = chosen.unwrap_or(FALLBACK_DEPTH);
    let idx = DEPTHS.iter().position(|&d| d == depth).unwrap();
    Ok(Refinement {
        report: reports.swap_remove(idx),
        interpretation: interpretations[idx].clone(),
        depth,
        defaulted: chosen.is_none(),
        interpretations,
    })
}
