//! The analysis pipeline and the depth-leveled report built from it.

mod build;
mod render;
mod stats;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{mfcc, resample_mono, stft, AudioClip, ANALYSIS_SAMPLE_RATE, HOP_SIZE, WINDOW_SIZE};
use crate::config::AnalysisConfig;
use crate::harmony::{chromagram, classify_key, recognize_chords, ChordSegment, KeyEstimate};
use crate::rhythm::{
    detect_onsets, estimate_downbeats, estimate_tempo, onset_strength, track_beats, BeatGrid, OnsetList, TempoEstimate,
    METER,
};
use crate::semantics::{classify_track_semantics, SectionFeatures, SemanticFeatures, TrackSemantics};
use crate::structure::{
    classify_emotion, detect_instruments, label_functions, segment_structure, single_segment, Section,
};
use crate::timbre::{timbral_descriptors, TimbralProfile};

pub use build::{
    build_report, ChordEntry, EmotionRow, EmotionTransition, HarmonyReport, MusicReport, ProgressionEntry,
    RhythmReport, SectionEntry, SemanticsReport, StructureReport, TimbreReport, TrackMeta, SCHEMA_VERSION,
};
pub use render::render_report;
pub use stats::{chord_statistics, ChordStats, Progression};

/// Shortest clip [`analyze_track`] accepts.
pub const MIN_DURATION_S: f64 = 1.0;
const N_MELS: usize = 40;
const N_MFCC: usize = 13;

/// A result that may be missing, with the reason it is missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome<T> {
    Present(T),
    Absent(String),
}

impl<T> Outcome<T> {
    pub fn present(&self) -> Option<&T> {
        match self {
            Outcome::Present(v) => Some(v),
            Outcome::Absent(_) => None,
        }
    }

    pub fn absent_reason(&self) -> Option<&str> {
        match self {
            Outcome::Present(_) => None,
            Outcome::Absent(r) => Some(r),
        }
    }
}

/// Everything the analyzers produced for one track, at full precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisBundle {
    pub duration_s: f64,
    /// Rate the analysis ran at.
    pub sample_rate: u32,
    pub tempo: Outcome<TempoEstimate>,
    /// Empty when there is no tempo.
    pub beats: BeatGrid,
    pub onsets: OnsetList,
    pub key: Outcome<KeyEstimate>,
    pub chords: Vec<ChordSegment>,
    pub sections: Vec<Section>,
    /// Why the track is a single unsegmented section, if it is.
    pub structure_note: Option<String>,
    pub timbre: TimbralProfile,
    pub semantics: TrackSemantics,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("clip is {duration_s:.2} s long; at least 1 s is needed")]
    TooShort { duration_s: f64 },
}

/// Runs every analyzer on `clip` (any rate or channel count).
///
/// Rhythm and harmony run alongside timbre; structure waits for both.
/// Analyzer failures become [`Outcome::Absent`] entries rather than errors.
pub fn analyze_track(clip: &AudioClip, config: &AnalysisConfig) -> Result<AnalysisBundle, AnalysisError> {
    let duration_s = clip.duration_s();
    if duration_s < MIN_DURATION_S {
        return Err(AnalysisError::TooShort { duration_s });
    }
    let mono = resample_mono(clip, ANALYSIS_SAMPLE_RATE);
    let duration_s = mono.duration_s();
    let spec = stft(&mono, WINDOW_SIZE, HOP_SIZE);

    let (timbre, (env, onsets, chroma, key, chords, tempo, beats), mfccs) = std::thread::scope(|s| {
        let timbre = s.spawn(|| timbral_descriptors(&mono, &spec, &config.timbre));
        let mfccs = s.spawn(|| mfcc(&spec, N_MELS, N_MFCC));
        let env = onset_strength(&spec);
        let onsets = detect_onsets(&env);
        let chroma = chromagram(&spec);
        let key = match classify_key(&chroma) {
            Ok(k) => Outcome::Present(k),
            Err(e) => Outcome::Absent(e.to_string()),
        };
        let chords = recognize_chords(&chroma, duration_s, &config.chords);
        let (tempo, beats) = match estimate_tempo(&env, &config.tempo) {
            Ok(t) => {
                let grid = track_beats(&env, &t, &config.beats);
                let grid = if grid.is_empty() { grid } else { estimate_downbeats(grid, &env, Some(&chroma)) };
                (Outcome::Present(t), grid)
            }
            Err(e) => (
                Outcome::Absent(format!("no rhythmic content detected ({e})")),
                BeatGrid { meter: METER, ..Default::default() },
            ),
        };
        (
            timbre.join().expect("timbre thread"),
            (env, onsets, chroma, key, chords, tempo, beats),
            mfccs.join().expect("mfcc thread"),
        )
    });
    drop(env);

    let (segments, structure_note) = if beats.is_empty() {
        (single_segment(duration_s), Some("no beats, track treated as one section".to_string()))
    } else {
        match segment_structure(&chroma, &mfccs, &beats, duration_s, &config.structure) {
            Ok(s) => (s, None),
            Err(e) => (single_segment(duration_s), Some(e.to_string())),
        }
    };

    let bpm = tempo.present().map(|t| t.bpm);
    let mode = key.present().map(|k| k.mode);
    let energies: Vec<f64> = segments
        .iter()
        .map(|s| {
            let x = mono.slice(s.start, s.end);
            let v = x.samples();
            if v.is_empty() {
                0.0
            } else {
                (v.iter().map(|s| s * s).sum::<f64>() / v.len() as f64).sqrt()
            }
        })
        .collect();
    let functions = label_functions(&segments, &energies);
    let sections: Vec<Section> = segments
        .iter()
        .zip(&energies)
        .zip(&functions)
        .map(|((seg, &energy), &function)| {
            let part = mono.slice(seg.start, seg.end);
            let part_spec = stft(&part, WINDOW_SIZE, HOP_SIZE);
            let brightness = timbral_descriptors(&part, &part_spec, &config.timbre).brightness;
            let instruments =
                if part.duration_s() >= 1.0 { detect_instruments(&part, &config.instruments) } else { Vec::new() };
            Section {
                start: seg.start,
                end: seg.end,
                cluster: seg.cluster,
                function,
                emotion: classify_emotion(bpm, mode, energy, brightness),
                instruments,
                energy,
            }
        })
        .collect();

    let mut all_instruments: Vec<_> = sections.iter().flat_map(|s| s.instruments.iter().map(|t| t.name)).collect();
    all_instruments.sort_unstable();
    all_instruments.dedup();
    let features = SemanticFeatures {
        tempo_bpm: bpm,
        key: key.present().map(|k| k.to_string()),
        mode,
        timbre,
        instruments: all_instruments,
        sections: sections
            .iter()
            .map(|s| SectionFeatures {
                start: s.start,
                end: s.end,
                function: s.function,
                emotion: s.emotion,
                instruments: s.instruments.iter().map(|t| t.name).collect(),
            })
            .collect(),
    };
    let semantics = classify_track_semantics(&features, config.plugin.as_ref());

    Ok(AnalysisBundle {
        duration_s,
        sample_rate: ANALYSIS_SAMPLE_RATE,
        tempo,
        beats,
        onsets,
        key,
        chords,
        sections,
        structure_note,
        timbre,
        semantics,
    })
}
