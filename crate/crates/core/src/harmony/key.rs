use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Chromagram, PitchClass};

/// Krumhansl-Kessler major-key probe-tone ratings, tonic first.
pub const MAJOR_PROFILE: [f64; 12] = [6.35, 2.23, 3.48, 2.33, 4.38, 4.09, 2.52, 5.19, 2.39, 3.66, 2.29, 2.88];
/// Krumhansl-Kessler minor-key probe-tone ratings, tonic first.
pub const MINOR_PROFILE: [f64; 12] = [6.33, 2.68, 3.52, 5.38, 2.60, 3.53, 2.54, 4.75, 3.98, 2.69, 3.34, 3.17];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Major,
    Minor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyEstimate {
    #[serde(with = "pitch_class_name")]
    pub tonic: PitchClass,
    pub mode: Mode,
    /// Pearson correlation of the winning key profile, in `[-1, 1]`.
    pub correlation: f64,
}

impl fmt::Display for KeyEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.mode {
            Mode::Major => "major",
            Mode::Minor => "minor",
        };
        write!(f, "{} {mode}", self.tonic)
    }
}

mod pitch_class_name {
    use super::PitchClass;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(pc: &PitchClass, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(pc.name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<PitchClass, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KeyError {
    #[error("ambiguous key: averaged chroma has no variance")]
    AmbiguousKey,
}

fn pearson(a: &[f64; 12], b: &[f64; 12]) -> f64 {
    let ma = a.iter().sum::<f64>() / 12.0;
    let mb = b.iter().sum::<f64>() / 12.0;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for i in 0..12 {
        let (da, db) = (a[i] - ma, b[i] - mb);
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    cov / (va * vb).sqrt()
}

fn rotate(profile: &[f64; 12], tonic: PitchClass) -> [f64; 12] {
    let mut out = [0.0; 12];
    for (i, v) in profile.iter().enumerate() {
        out[tonic.transpose(i as i32).index()] = *v;
    }
    out
}

/// Correlates the time-averaged chroma against all 24 rotated key profiles.
///
/// Candidates are visited tonic C..B, major before minor, and only a strictly
/// better correlation replaces the incumbent, which fixes the tie-break order.
pub fn classify_key(chroma: &Chromagram) -> Result<KeyEstimate, KeyError> {
    let mean = chroma.mean_vector();
    let mu = mean.iter().sum::<f64>() / 12.0;
    let var = mean.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / 12.0;
    if var <= 1e-12 * mu.max(1e-12).powi(2) || !var.is_finite() {
        return Err(KeyError::AmbiguousKey);
    }
    let mut best: Option<KeyEstimate> = None;
    for tonic in PitchClass::all() {
        for (mode, profile) in [(Mode::Major, &MAJOR_PROFILE), (Mode::Minor, &MINOR_PROFILE)] {
            let r = pearson(&mean, &rotate(profile, tonic));
            if best.is_none_or(|b| r > b.correlation) {
                best = Some(KeyEstimate { tonic, mode, correlation: r });
            }
        }
    }
    best.ok_or(KeyError::AmbiguousKey)
}
