use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::{build_system_prompt, BackendError, ChatBackend, Message, PromptTemplate, JUDGE_TEMPERATURE};
use crate::report::MusicReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "Creativity and Originality")]
    CreativityAndOriginality,
    #[serde(rename = "Genre Fidelity")]
    GenreFidelity,
    #[serde(rename = "Conveyability")]
    Conveyability,
    #[serde(rename = "Musical Richness")]
    MusicalRichness,
    #[serde(rename = "Track Memorability")]
    TrackMemorability,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::CreativityAndOriginality,
        Category::GenreFidelity,
        Category::Conveyability,
        Category::MusicalRichness,
        Category::TrackMemorability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::CreativityAndOriginality => "Creativity and Originality",
            Category::GenreFidelity => "Genre Fidelity",
            Category::Conveyability => "Conveyability",
            Category::MusicalRichness => "Musical Richness",
            Category::TrackMemorability => "Track Memorability",
        }
    }

    /// Key used in the model's JSON block.
    pub fn key(self) -> &'static str {
        match self {
            Category::CreativityAndOriginality => "creativity_and_originality",
            Category::GenreFidelity => "genre_fidelity",
            Category::Conveyability => "conveyability",
            Category::MusicalRichness => "musical_richness",
            Category::TrackMemorability => "track_memorability",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryScore {
    pub category: Category,
    /// 1 to 10.
    pub score: u8,
    pub justification: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RubricScores {
    pub creativity_and_originality: CategoryScore,
    pub genre_fidelity: CategoryScore,
    pub conveyability: CategoryScore,
    pub musical_richness: CategoryScore,
    pub track_memorability: CategoryScore,
    /// Categories whose reported score was outside 1..=10 and got clamped.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub clamped: Vec<Category>,
}

impl RubricScores {
    pub fn get(&self, c: Category) -> &CategoryScore {
        match c {
            Category::CreativityAndOriginality => &self.creativity_and_originality,
            Category::GenreFidelity => &self.genre_fidelity,
            Category::Conveyability => &self.conveyability,
            Category::MusicalRichness => &self.musical_richness,
            Category::TrackMemorability => &self.track_memorability,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &CategoryScore> {
        Category::ALL.into_iter().map(|c| self.get(c))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreOutcome {
    pub scores: RubricScores,
    /// Correction round trips needed (0 or 1).
    pub retries: u32,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoreError {
    #[error("could not parse scores after a retry: {0}")]
    Parse(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

pub(crate) const SCORING_REQUEST: &str = "Score my track now. Reply with a single fenced ```json block \
and nothing else. The block must be an object with exactly these keys: creativity_and_originality, \
genre_fidelity, conveyability, musical_richness, track_memorability. Each value must be an object \
{\"score\": <integer 1-10>, \"justification\": <string>}.";

const CORRECTION_REQUEST: &str = "I could not parse that. Resend the scores as one fenced ```json block \
with exactly the five keys creativity_and_originality, genre_fidelity, conveyability, musical_richness \
and track_memorability, each {\"score\": <integer 1-10>, \"justification\": <string>}.";

static FENCE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)```(?:json|JSON)?[ \t]*\r?\n?(.*?)```").unwrap());

/// Extracts the first fenced block that parses as a score object.
pub fn parse_scores(reply: &str) -> Result<RubricScores, String> {
    let mut last_err = "no fenced block in reply".to_string();
    for cap in FENCE.captures_iter(reply) {
        match serde_json::from_str::<Value>(&cap[1]).map_err(|e| e.to_string()).and_then(|v| from_value(&v)) {
            Ok(s) => return Ok(s),
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

fn from_value(v: &Value) -> Result<RubricScores, String> {
    let obj = v.as_object().ok_or("score block is not an object")?;
    let mut clamped = Vec::new();
    let mut get = |c: Category| -> Result<CategoryScore, String> {
        let entry = obj.get(c.key()).ok_or_else(|| format!("missing {}", c.key()))?;
        let raw =
            entry.get("score").and_then(Value::as_i64).ok_or_else(|| format!("{} has no integer score", c.key()))?;
        let score = raw.clamp(1, 10);
        if score != raw {
            clamped.push(c);
        }
        let justification = entry.get("justification").and_then(Value::as_str).unwrap_or("").trim().to_string();
        Ok(CategoryScore { category: c, score: score as u8, justification })
    };
    Ok(RubricScores {
        creativity_and_originality: get(Category::CreativityAndOriginality)?,
        genre_fidelity: get(Category::GenreFidelity)?,
        conveyability: get(Category::Conveyability)?,
        musical_richness: get(Category::MusicalRichness)?,
        track_memorability: get(Category::TrackMemorability)?,
        clamped,
    })
}

/// Asks for rubric scores, retrying once with a correction message if the
/// reply has no parsable block. Out-of-range scores are clamped and listed in
/// [`RubricScores::clamped`].
pub fn score_track(
    report: &MusicReport,
    template: &PromptTemplate,
    backend: &dyn ChatBackend,
) -> Result<ScoreOutcome, ScoreError> {
    let mut messages = vec![Message::system(build_system_prompt(report, template)), Message::user(SCORING_REQUEST)];
    let first = backend.send(&messages, JUDGE_TEMPERATURE)?;
    if let Ok(scores) = parse_scores(&first) {
        return Ok(ScoreOutcome { scores, retries: 0 });
    }
    messages.push(Message::assistant(first));
    messages.push(Message::user(CORRECTION_REQUEST));
    let second = backend.send(&messages, JUDGE_TEMPERATURE)?;
    parse_scores(&second).map(|scores| ScoreOutcome { scores, retries: 1 }).map_err(ScoreError::Parse)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(score: i64) -> String {
        let body: Vec<String> = Category::ALL
            .iter()
            .map(|c| format!("\"{}\": {{\"score\": {score}, \"justification\": \"ok\"}}", c.key()))
            .collect();
        format!("Here you go:\n```json\n{{{}}}\n```\n", body.join(", "))
    }

    #[test]
    fn parses_fenced_block() {
        let s = parse_scores(&block(5)).unwrap();
        assert!(s.iter().all(|c| c.score == 5));
        assert!(s.clamped.is_empty());
    }

    #[test]
    fn clamps_and_flags() {
        let s = parse_scores(&block(13)).unwrap();
        assert!(s.iter().all(|c| c.score == 10));
        assert_eq!(s.clamped, Category::ALL.to_vec());
        let s = parse_scores(&block(0)).unwrap();
        assert!(s.iter().all(|c| c.score == 1));
    }

    #[test]
    fn rejects_prose_and_missing_keys() {
        assert!(parse_scores("It's a solid 7 overall.").is_err());
        assert!(parse_scores("```json\n{\"genre_fidelity\": {\"score\": 3}}\n```").is_err());
        assert!(parse_scores("```json\nnot json\n```").is_err());
    }

    #[test]
    fn category_names_serialize_verbatim() {
        let json = serde_json::to_string(&parse_scores(&block(5)).unwrap()).unwrap();
        for c in Category::ALL {
            assert!(json.contains(c.name()), "{}", c.name());
        }
    }
}
