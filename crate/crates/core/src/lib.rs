//! Audio analysis and producer-feedback orchestration.

pub mod audio;
pub mod config;
pub mod harmony;
pub mod llm;
pub mod report;
pub mod rhythm;
pub mod semantics;
pub mod structure;
pub mod synth;
pub mod timbre;

pub use audio::{decode_audio, encode_wav_pcm16, AudioClip, DecodeError};
pub use config::AnalysisConfig;
pub use harmony::{ChordLabel, ChordSegment, KeyEstimate, Mode, PitchClass};
pub use llm::{BackendError, ChatBackend, ChatSession, Message, MockBackend, PromptTemplate, Role, RubricScores};
pub use report::{analyze_track, build_report, render_report, AnalysisBundle, AnalysisError, MusicReport, Outcome};
pub use rhythm::{BeatGrid, TempoEstimate};
pub use semantics::{Genre, PluginClassifier, Theme, TrackSemantics};
pub use structure::{Section, SectionFunction};
pub use timbre::TimbralProfile;
