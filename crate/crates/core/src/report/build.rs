use serde::{Deserialize, Serialize};

use super::stats::chord_statistics;
use super::AnalysisBundle;
use crate::harmony::ChordLabel;
use crate::semantics::{Genre, SemanticsSource, Theme};
use crate::structure::{EmotionLabel, InstrumentName, SectionFunction};

pub const SCHEMA_VERSION: &str = "1";

/// Two decimal places, with negative zero normalised.
fn r2(x: f64) -> f64 {
    let v = (x * 100.0).round() / 100.0;
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

fn score(x: f64) -> u8 {
    x.round().clamp(0.0, 100.0) as u8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackMeta {
    pub duration_s: f64,
    pub sample_rate: u32,
    /// Hex SHA-256 of the source file, filled in by whoever read the bytes.
    pub source_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhythmReport {
    pub tempo_bpm: Option<f64>,
    pub tempo_confidence: Option<f64>,
    /// Present only when the tempo is missing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub beat_count: usize,
    pub downbeat_count: usize,
    pub meter: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub onset_count: Option<usize>,
    /// Coefficient of variation of inter-beat intervals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tempo_stability_cv: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub onset_density_per_s: Option<f64>,
}

/// A chord segment in the raw `{end, label, start}` shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChordEntry {
    pub end: f64,
    pub label: ChordLabel,
    pub start: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressionEntry {
    /// Labels joined by `" -> "`.
    pub progression: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonyReport {
    pub key: Option<String>,
    pub key_correlation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub chords: Vec<ChordEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chord_changes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dominant_chord: Option<ChordLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub major_chord_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minor_chord_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avg_chord_duration_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_progressions: Option<Vec<ProgressionEntry>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimbreReport {
    pub brightness: u8,
    pub warmth: u8,
    pub depth: u8,
    pub hardness: u8,
    pub roughness: u8,
    pub sharpness: u8,
    pub boominess: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionEntry {
    pub start: f64,
    pub end: f64,
    pub cluster: char,
    pub function: SectionFunction,
    pub energy: f64,
    pub instruments: Vec<InstrumentName>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionRow {
    pub section: usize,
    pub emotion: EmotionLabel,
    pub valence: f64,
    pub arousal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionTransition {
    pub from_section: usize,
    pub to_section: usize,
    pub valence_delta: f64,
    pub arousal_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub sections: Vec<SectionEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emotions: Option<Vec<EmotionRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emotion_transitions: Option<Vec<EmotionTransition>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticsReport {
    pub genre: Genre,
    pub theme: Theme,
    pub source: SemanticsSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// LLM-readable analysis document. Field order is fixed by declaration, so
/// serialization is deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MusicReport {
    pub schema_version: String,
    pub depth: u8,
    pub track_meta: TrackMeta,
    pub rhythm: RhythmReport,
    pub harmony: HarmonyReport,
    pub timbre: TimbreReport,
    pub structure: StructureReport,
    pub semantics: SemanticsReport,
}

impl MusicReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Builds the report at `depth` (clamped to 1..=3).
///
/// Depth 1 carries the raw analysis. Depth 2 adds chord counts, tempo
/// stability, onset density and a per-section emotion table. Depth 3 adds the
/// average chord duration, top progressions and emotion deltas between
/// consecutive sections.
pub fn build_report(bundle: &AnalysisBundle, depth: u8) -> MusicReport {
    let depth = depth.clamp(1, 3);
    let d2 = depth >= 2;
    let d3 = depth >= 3;
    let stats = chord_statistics(&bundle.chords);

    let tempo = bundle.tempo.present();
    let ibis = bundle.beats.inter_beat_intervals();
    let cv = if ibis.len() >= 2 {
        let mean = ibis.iter().sum::<f64>() / ibis.len() as f64;
        let var = ibis.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / ibis.len() as f64;
        var.sqrt() / mean
    } else {
        0.0
    };
    let rhythm = RhythmReport {
        tempo_bpm: tempo.map(|t| r2(t.bpm)),
        tempo_confidence: tempo.map(|t| r2(t.confidence)),
        note: bundle.tempo.absent_reason().map(|_| "no rhythmic content detected".to_string()),
        beat_count: bundle.beats.len(),
        downbeat_count: bundle.beats.downbeat_flags.iter().filter(|&&d| d).count(),
        meter: bundle.beats.meter,
        onset_count: d2.then_some(bundle.onsets.len()),
        tempo_stability_cv: d2.then_some(r2(cv)),
        onset_density_per_s: d2.then_some(r2(bundle.onsets.len() as f64 / bundle.duration_s)),
    };

    let key = bundle.key.present();
    let harmony = HarmonyReport {
        key: key.map(|k| k.to_string()),
        key_correlation: key.map(|k| r2(k.correlation)),
        note: bundle.key.absent_reason().map(str::to_string),
        chords: bundle
            .chords
            .iter()
            .map(|c| ChordEntry { end: r2(c.end), label: c.label, start: r2(c.start) })
            .collect(),
        chord_changes: d2.then_some(stats.total_changes),
        dominant_chord: d2.then_some(stats.dominant_chord),
        major_chord_count: d2.then_some(stats.major_count),
        minor_chord_count: d2.then_some(stats.minor_count),
        avg_chord_duration_s: d3.then_some(r2(stats.avg_duration_s)),
        top_progressions: d3.then(|| {
            stats
                .top_progressions
                .iter()
                .map(|p| ProgressionEntry {
                    progression: p.chords.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" -> "),
                    count: p.count,
                })
                .collect()
        }),
    };

    let t = &bundle.timbre;
    let timbre = TimbreReport {
        brightness: score(t.brightness),
        warmth: score(t.warmth),
        depth: score(t.depth),
        hardness: score(t.hardness),
        roughness: score(t.roughness),
        sharpness: score(t.sharpness),
        boominess: score(t.boominess),
    };

    let sections = &bundle.sections;
    let structure = StructureReport {
        sections: sections
            .iter()
            .map(|s| SectionEntry {
                start: r2(s.start),
                end: r2(s.end),
                cluster: s.cluster,
                function: s.function,
                energy: r2(s.energy),
                instruments: s.instruments.iter().map(|i| i.name).collect(),
            })
            .collect(),
        note: bundle.structure_note.clone(),
        emotions: d2.then(|| {
            sections
                .iter()
                .enumerate()
                .map(|(i, s)| EmotionRow {
                    section: i + 1,
                    emotion: s.emotion.label,
                    valence: r2(s.emotion.valence),
                    arousal: r2(s.emotion.arousal),
                })
                .collect()
        }),
        emotion_transitions: d3.then(|| {
            sections
                .windows(2)
                .enumerate()
                .map(|(i, w)| EmotionTransition {
                    from_section: i + 1,
                    to_section: i + 2,
                    valence_delta: r2(w[1].emotion.valence - w[0].emotion.valence),
                    arousal_delta: r2(w[1].emotion.arousal - w[0].emotion.arousal),
                })
                .collect()
        }),
    };

    let s = &bundle.semantics;
    MusicReport {
        schema_version: SCHEMA_VERSION.to_string(),
        depth,
        track_meta: TrackMeta { duration_s: r2(bundle.duration_s), sample_rate: bundle.sample_rate, source_hash: None },
        rhythm,
        harmony,
        timbre,
        structure,
        semantics: SemanticsReport { genre: s.genre, theme: s.theme, source: s.source, warning: s.warning.clone() },
    }
}
