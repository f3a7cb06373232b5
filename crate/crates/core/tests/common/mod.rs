#![allow(dead_code)]

use trackmate_core::harmony::{ChordLabel, ChordSegment, KeyEstimate, Mode, PitchClass};
use trackmate_core::report::{AnalysisBundle, Outcome};
use trackmate_core::rhythm::{BeatGrid, OnsetList, TempoEstimate};
use trackmate_core::semantics::{Genre, SemanticsSource, Theme, TrackSemantics};
use trackmate_core::structure::{EmotionLabel, EmotionTag, InstrumentName, InstrumentTag, Section, SectionFunction};
use trackmate_core::synth;
use trackmate_core::timbre::TimbralProfile;
use trackmate_core::AudioClip;

pub const SR: u32 = 22_050;

fn section(start: f64, end: f64, cluster: char, function: SectionFunction, valence: f64, arousal: f64) -> Section {
    Section {
        start,
        end,
        cluster,
        function,
        emotion: EmotionTag { label: EmotionLabel::from_axes(valence, arousal), valence, arousal },
        instruments: vec![
            InstrumentTag { name: InstrumentName::Drums, confidence: 0.9 },
            InstrumentTag { name: InstrumentName::Harmonic, confidence: 0.7 },
        ],
        energy: 0.1 + arousal.abs() / 10.0,
    }
}

/// A hand-built bundle with the G:min segment from 0.79 s to 4.37 s.
pub fn g_minor_bundle() -> AnalysisBundle {
    let beats: Vec<f64> = (0..24).map(|i| 0.25 + i as f64 * 0.5).collect();
    AnalysisBundle {
        duration_s: 12.0,
        sample_rate: SR,
        tempo: Outcome::Present(TempoEstimate { bpm: 120.0, confidence: 0.83 }),
        beats: beat_times_flags(beats),
        onsets: OnsetList { times_s: (0..30).map(|i| 0.2 + i as f64 * 0.39).collect() },
        key: Outcome::Present(KeyEstimate { tonic: PitchClass::G, mode: Mode::Minor, correlation: 0.81 }),
        chords: vec![
            ChordSegment::new(0.0, 0.79, ChordLabel::NoChord),
            ChordSegment::new(0.79, 4.37, ChordLabel::minor(PitchClass::G)),
            ChordSegment::new(4.37, 6.0, ChordLabel::major(PitchClass::D)),
            ChordSegment::new(6.0, 8.0, ChordLabel::minor(PitchClass::G)),
            ChordSegment::new(8.0, 10.0, ChordLabel::major(PitchClass::C)),
            ChordSegment::new(10.0, 12.0, ChordLabel::minor(PitchClass::G)),
        ],
        sections: vec![
            section(0.0, 4.0, 'A', SectionFunction::Verse, -0.4, -0.2),
            section(4.0, 8.0, 'B', SectionFunction::Chorus, 0.3, 0.4),
            section(8.0, 12.0, 'A', SectionFunction::Verse, -0.5, 0.1),
        ],
        structure_note: None,
        timbre: TimbralProfile {
            brightness: 41.2,
            warmth: 63.5,
            depth: 55.0,
            hardness: 38.4,
            roughness: 12.6,
            sharpness: 27.1,
            boominess: 48.9,
        },
        semantics: TrackSemantics {
            genre: Genre::Pop,
            theme: Theme::Melancholy,
            source: SemanticsSource::Heuristic,
            warning: None,
        },
    }
}

fn beat_times_flags(beats: Vec<f64>) -> BeatGrid {
    let flags = (0..beats.len()).map(|i| i % 4 == 0).collect();
    BeatGrid { beat_times_s: beats, downbeat_flags: flags, meter: 4 }
}

/// Five short clips covering rhythmic, harmonic, silent and sectional material.
pub fn fixture_clips() -> Vec<(&'static str, AudioClip)> {
    let c = ChordLabel::major(PitchClass::C);
    let am = ChordLabel::minor(PitchClass::A);
    let f = ChordLabel::major(PitchClass::F);
    let g = ChordLabel::major(PitchClass::G);
    let harmony = [
        (ChordLabel::major(PitchClass::D), 0.79),
        (ChordLabel::minor(PitchClass::G), 4.37 - 0.79),
        (ChordLabel::major(PitchClass::C), 6.0 - 4.37),
    ];
    vec![
        ("pop", AudioClip::from_mono(synth::pop_loop(100.0, 4, &[c, am, f, g], SR), SR)),
        ("electronic", AudioClip::from_mono(synth::electronic_loop(128.0, 4, SR), SR)),
        ("harmony", AudioClip::from_mono(synth::chord_sequence(&harmony, 0.2, SR), SR)),
        ("silence", AudioClip::from_mono(synth::silence(3.0, SR), SR)),
        ("two_part", AudioClip::from_mono(synth::two_part_track(120.0, 4, 4, PitchClass::E, SR, 7).samples, SR)),
    ]
}
