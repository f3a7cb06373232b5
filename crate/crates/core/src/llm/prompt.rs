use serde::{Deserialize, Serialize};

use crate::report::{render_report, MusicReport};

/// The colloquial-tone block, present only when the persona is on.
pub const PERSONA_BLOCK: &str = "Tone: talk to the producer like a friendly rapper who also makes beats. \
Keep it warm and casual. Use metaphors and analogies from the studio and the stage to explain technical ideas, \
but never let the slang bury the advice.";

const REPORT_FRAMING: &str = "You are given the measured analysis of the producer's track below. \
You can treat every number in it as a fact. You do not need to re-measure anything, and where a value is \
marked as not measured you know only that it could not be measured.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Persona {
    pub producer_tone: bool,
}

impl Default for Persona {
    fn default() -> Self {
        Self { producer_tone: true }
    }
}

/// The three instruction parts of the system prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptTemplate {
    pub primary_function: String,
    pub scoring_process: String,
    pub improvement_instructions: String,
    pub persona: Persona,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self {
            primary_function: "I am a seasoned music producer reviewing a track made by an independent bedroom \
producer. I read the analysis as if I were sitting next to them in the studio, and I form my own judgment \
before I say anything. I ground every opinion I hold in the measurements I am given.\n\
Answer as that producer. Never invent measurements that are not in the report. Say plainly when an aspect \
could not be measured."
                .into(),
            scoring_process: "I score the track on five categories, each with an integer from 1 to 10: \
Creativity and Originality, Genre Fidelity, Conveyability, Musical Richness, and Track Memorability. \
I weigh each category against what the report actually shows, not against what I hope the track sounds like.\n\
Avoid excessive praise and identify areas needing improvement. Do not give any category a 10 unless the \
report leaves nothing to improve. Justify every score in one or two sentences that cite the report."
                .into(),
            improvement_instructions: "When I suggest improvements I walk through the track factor by factor. \
I start with the objective side (instruments, rhythm, timbre), move to the subjective side (emotion and theme), \
and finish with how the two interact. I tie each suggestion to a concrete measurement.\n\
Give suggestions the producer can try in their next session. Use clear, constructive language and balance \
critique with encouragement. Interpret the data instead of repeating it. Cover melody, harmony, rhythm and \
production technique wherever the report supports it. End every reply with one question tailored to this \
track that invites the producer to keep the conversation going."
                .into(),
            persona: Persona::default(),
        }
    }
}

/// Concatenates the instruction parts, the optional persona block and the
/// second-person report framing. Deterministic in its inputs.
pub fn build_system_prompt(report: &MusicReport, template: &PromptTemplate) -> String {
    let mut out = String::new();
    out.push_str("# PRIMARY FUNCTION\n");
    out.push_str(template.primary_function.trim_end());
    out.push_str("\n\n# TRACK SCORING PROCESS\n");
    out.push_str(template.scoring_process.trim_end());
    out.push_str("\n\n# TRACK IMPROVEMENT SUGGESTIONS\n");
    out.push_str(template.improvement_instructions.trim_end());
    if template.persona.producer_tone {
        out.push_str("\n\n");
        out.push_str(PERSONA_BLOCK);
    }
    out.push_str("\n\n# TRACK REPORT\n");
    out.push_str(REPORT_FRAMING);
    out.push_str("\n\n");
    out.push_str(&render_report(report));
    out
}
