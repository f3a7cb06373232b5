use serde::{Deserialize, Serialize};

use crate::harmony::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmotionLabel {
    Happy,
    Tense,
    Sad,
    Calm,
}

impl EmotionLabel {
    /// Quadrant of the valence/arousal plane. Zero counts as positive.
    pub fn from_axes(valence: f64, arousal: f64) -> Self {
        match (valence >= 0.0, arousal >= 0.0) {
            (true, true) => EmotionLabel::Happy,
            (false, true) => EmotionLabel::Tense,
            (false, false) => EmotionLabel::Sad,
            (true, false) => EmotionLabel::Calm,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EmotionLabel::Happy => "happy",
            EmotionLabel::Tense => "tense",
            EmotionLabel::Sad => "sad",
            EmotionLabel::Calm => "calm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmotionTag {
    pub label: EmotionLabel,
    pub valence: f64,
    pub arousal: f64,
}

/// RMS that maps to neutral arousal.
const NEUTRAL_RMS: f64 = 0.1;

/// Rule-based valence/arousal.
///
/// Valence is +0.5 for major, -0.5 for minor (0 when the key is unknown),
/// shifted by up to 0.3 as brightness moves away from 50. Arousal averages a
/// tempo term (60 BPM -> -1, 200 BPM -> +1, 0 when unknown) and an energy
/// term (RMS 0 -> -1, 0.1 -> 0, 0.2 and above -> +1).
pub fn classify_emotion(bpm: Option<f64>, mode: Option<Mode>, energy: f64, brightness: f64) -> EmotionTag {
    let mode_term = match mode {
        Some(Mode::Major) => 0.5,
        Some(Mode::Minor) => -0.5,
        None => 0.0,
    };
    let valence = (mode_term + 0.3 * (brightness / 50.0 - 1.0).clamp(-1.0, 1.0)).clamp(-1.0, 1.0);
    let tempo_term = bpm.map_or(0.0, |b| ((b - 130.0) / 70.0).clamp(-1.0, 1.0));
    let energy_term = (energy / NEUTRAL_RMS - 1.0).clamp(-1.0, 1.0);
    let arousal = (0.5 * tempo_term + 0.5 * energy_term).clamp(-1.0, 1.0);
    EmotionTag { label: EmotionLabel::from_axes(valence, arousal), valence, arousal }
}
