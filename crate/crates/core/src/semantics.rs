//! Track-level genre and theme, from a heuristic decision list or an
//! external classifier run as a subprocess.
//!
//! Plugin protocol: the command runs under `sh -c`, receives one JSON
//! [`SemanticFeatures`] document on stdin and must print `{"genre": ..,
//! "theme": ..}` on stdout and exit 0. Labels outside the fixed vocabularies
//! are rejected.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use wait_timeout::ChildExt;

use crate::harmony::Mode;
use crate::structure::{EmotionTag, InstrumentName, SectionFunction};
use crate::timbre::TimbralProfile;

macro_rules! vocabulary {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!("'{other}' is not a known {}", stringify!($name).to_lowercase())),
                }
            }
        }

        impl Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

vocabulary!(Genre {
    Pop => "pop",
    Rock => "rock",
    HipHop => "hip-hop",
    Electronic => "electronic",
    Jazz => "jazz",
    Folk => "folk",
    Classical => "classical",
    Other => "other",
});

vocabulary!(Theme {
    Love => "love",
    Party => "party",
    Melancholy => "melancholy",
    Energy => "energy",
    Chill => "chill",
    Other => "other",
});

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SemanticsSource {
    Heuristic,
    Plugin,
}

impl SemanticsSource {
    pub fn as_str(self) -> &'static str {
        match self {
            SemanticsSource::Heuristic => "heuristic",
            SemanticsSource::Plugin => "plugin",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackSemantics {
    pub genre: Genre,
    pub theme: Theme,
    pub source: SemanticsSource,
    /// Set when a configured plugin failed and the heuristic was used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionFeatures {
    pub start: f64,
    pub end: f64,
    pub function: SectionFunction,
    pub emotion: EmotionTag,
    pub instruments: Vec<InstrumentName>,
}

/// Everything the classifiers see. This is also the plugin's stdin document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticFeatures {
    pub tempo_bpm: Option<f64>,
    /// e.g. `"A minor"`.
    pub key: Option<String>,
    pub mode: Option<Mode>,
    pub timbre: TimbralProfile,
    /// Instruments present in any section.
    pub instruments: Vec<InstrumentName>,
    pub sections: Vec<SectionFeatures>,
}

impl SemanticFeatures {
    fn has(&self, name: InstrumentName) -> bool {
        self.instruments.contains(&name)
    }

    /// Duration-weighted mean (valence, arousal) over sections.
    pub fn mean_emotion(&self) -> (f64, f64) {
        let total: f64 = self.sections.iter().map(|s| s.end - s.start).sum();
        if total <= 0.0 {
            return (0.0, 0.0);
        }
        self.sections.iter().fold((0.0, 0.0), |(v, a), s| {
            let w = (s.end - s.start) / total;
            (v + w * s.emotion.valence, a + w * s.emotion.arousal)
        })
    }
}

/// External classifier command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PluginClassifier {
    pub command: String,
    #[serde(default = "default_timeout", with = "secs")]
    pub timeout: Duration,
}

fn default_timeout() -> Duration {
    Duration::from_secs(10)
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

impl PluginClassifier {
    pub fn new(command: impl Into<String>) -> Self {
        Self { command: command.into(), timeout: default_timeout() }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PluginError {
    #[error("could not start classifier: {0}")]
    Spawn(String),
    #[error("classifier timed out after {0:?}")]
    Timeout(Duration),
    #[error("classifier exited with {0}")]
    Exit(String),
    #[error("malformed classifier reply: {0}")]
    Malformed(String),
}

#[derive(Deserialize)]
struct PluginReply {
    genre: String,
    theme: String,
}

/// Runs the plugin once. Stdout is drained on a separate thread so a chatty
/// child cannot block on a full pipe while we wait.
pub fn run_plugin(plugin: &PluginClassifier, features: &SemanticFeatures) -> Result<(Genre, Theme), PluginError> {
    let input = serde_json::to_vec(features).map_err(|e| PluginError::Malformed(e.to_string()))?;
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(&plugin.command)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| PluginError::Spawn(e.to_string()))?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let writer = std::thread::spawn(move || {
        // A plugin that ignores stdin closes the pipe early; that is fine.
        let _ = stdin.write_all(&input);
    });
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stdout.read_to_end(&mut buf);
        buf
    });
    let status = match child.wait_timeout(plugin.timeout) {
        Ok(Some(status)) => status,
        Ok(None) => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(PluginError::Timeout(plugin.timeout));
        }
        Err(e) => return Err(PluginError::Spawn(e.to_string())),
    };
    let _ = writer.join();
    let out = reader.join().unwrap_or_default();
    if !status.success() {
        return Err(PluginError::Exit(status.to_string()));
    }
    let reply: PluginReply = serde_json::from_slice(&out).map_err(|e| PluginError::Malformed(e.to_string()))?;
    let genre = reply.genre.parse().map_err(PluginError::Malformed)?;
    let theme = reply.theme.parse().map_err(PluginError::Malformed)?;
    Ok((genre, theme))
}

/// Decision list over tempo, instruments and timbre. First matching rule wins.
pub fn heuristic_semantics(f: &SemanticFeatures) -> TrackSemantics {
    use InstrumentName::*;
    let bpm = f.tempo_bpm;
    let in_range = |lo: f64, hi: f64| bpm.is_some_and(|b| b >= lo && b < hi);
    let t = &f.timbre;
    let genre = if f.has(Drums) && t.sharpness >= 50.0 && in_range(118.0, 136.0) {
        Genre::Electronic
    } else if f.has(Drums) && f.has(Bass) && in_range(80.0, 100.0) && t.boominess >= 60.0 {
        Genre::HipHop
    } else if f.has(Drums) && t.roughness >= 60.0 && t.brightness >= 60.0 {
        Genre::Rock
    } else if f.has(Drums) && f.has(Harmonic) {
        Genre::Pop
    } else if !f.has(Drums) && f.has(Harmonic) && t.warmth >= 50.0 && t.brightness < 60.0 {
        Genre::Folk
    } else if !f.has(Drums) && f.has(Harmonic) {
        Genre::Classical
    } else {
        Genre::Other
    };

    let (valence, arousal) = f.mean_emotion();
    let theme = if genre == Genre::Electronic || (f.has(Drums) && arousal >= 0.5) {
        Theme::Party
    } else if valence < 0.0 && arousal < 0.0 {
        Theme::Melancholy
    } else if arousal >= 0.3 {
        Theme::Energy
    } else if f.mode == Some(Mode::Major) && valence >= 0.3 && in_range(60.0, 110.0) {
        Theme::Love
    } else if arousal < 0.0 && valence >= 0.0 {
        Theme::Chill
    } else {
        Theme::Other
    };
    TrackSemantics { genre, theme, source: SemanticsSource::Heuristic, warning: None }
}

/// Uses the plugin when one is given, falling back to the heuristic (with a
/// warning) if it fails.
pub fn classify_track_semantics(features: &SemanticFeatures, plugin: Option<&PluginClassifier>) -> TrackSemantics {
    let Some(plugin) = plugin else {
        return heuristic_semantics(features);
    };
    match run_plugin(plugin, features) {
        Ok((genre, theme)) => TrackSemantics { genre, theme, source: SemanticsSource::Plugin, warning: None },
        Err(e) => {
            log::warn!("semantic classifier plugin failed: {e}");
            TrackSemantics {
                warning: Some(format!("plugin failed, heuristic used: {e}")),
                ..heuristic_semantics(features)
            }
        }
    }
}
