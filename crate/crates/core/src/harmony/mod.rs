//! Chromagram extraction, key classification and chord recognition.

mod chords;
mod key;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::audio::Spectrogram;

pub use chords::{recognize_chords, ChordParams, ChordSegment};
pub use key::{classify_key, KeyError, KeyEstimate, Mode, MAJOR_PROFILE, MINOR_PROFILE};

/// Lowest frequency folded into the chromagram.
pub const CHROMA_MIN_HZ: f64 = 55.0;
/// Highest frequency folded into the chromagram.
pub const CHROMA_MAX_HZ: f64 = 1760.0;

const NOTE_NAMES: [&str; 12] = ["C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"];

/// Pitch class, `C = 0` through `B = 11`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PitchClass(u8);

impl PitchClass {
    pub const C: PitchClass = PitchClass(0);
    pub const D: PitchClass = PitchClass(2);
    pub const E: PitchClass = PitchClass(4);
    pub const F: PitchClass = PitchClass(5);
    pub const G: PitchClass = PitchClass(7);
    pub const A: PitchClass = PitchClass(9);
    pub const B: PitchClass = PitchClass(11);

    /// Wraps any integer into `0..12`.
    pub fn new(index: i32) -> Self {
        PitchClass(index.rem_euclid(12) as u8)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn transpose(self, semitones: i32) -> Self {
        PitchClass::new(self.0 as i32 + semitones)
    }

    pub fn name(self) -> &'static str {
        NOTE_NAMES[self.index()]
    }

    pub fn all() -> impl Iterator<Item = PitchClass> {
        (0..12).map(PitchClass)
    }
}

impl fmt::Display for PitchClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PitchClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NOTE_NAMES
            .iter()
            .position(|n| *n == s)
            .map(|i| PitchClass(i as u8))
            .ok_or_else(|| format!("unknown pitch class '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quality {
    Major,
    Minor,
}

/// One of the 24 major/minor triads or `N` (no chord).
///
/// Text form is `<ROOT>:maj`, `<ROOT>:min` or `N`, e.g. `G:min`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChordLabel {
    Triad { root: PitchClass, quality: Quality },
    NoChord,
}

impl ChordLabel {
    pub fn major(root: PitchClass) -> Self {
        ChordLabel::Triad { root, quality: Quality::Major }
    }

    pub fn minor(root: PitchClass) -> Self {
        ChordLabel::Triad { root, quality: Quality::Minor }
    }

    /// Index into the 25-state vocabulary: majors 0..12, minors 12..24, N = 24.
    pub fn index(self) -> usize {
        match self {
            ChordLabel::Triad { root, quality: Quality::Major } => root.index(),
            ChordLabel::Triad { root, quality: Quality::Minor } => 12 + root.index(),
            ChordLabel::NoChord => 24,
        }
    }

    pub fn from_index(i: usize) -> Self {
        match i {
            0..=11 => ChordLabel::major(PitchClass(i as u8)),
            12..=23 => ChordLabel::minor(PitchClass((i - 12) as u8)),
            _ => ChordLabel::NoChord,
        }
    }

    pub fn transpose(self, semitones: i32) -> Self {
        match self {
            ChordLabel::Triad { root, quality } => ChordLabel::Triad { root: root.transpose(semitones), quality },
            ChordLabel::NoChord => ChordLabel::NoChord,
        }
    }

    pub fn is_chord(self) -> bool {
        !matches!(self, ChordLabel::NoChord)
    }

    pub fn quality(self) -> Option<Quality> {
        match self {
            ChordLabel::Triad { quality, .. } => Some(quality),
            ChordLabel::NoChord => None,
        }
    }

    /// Pitch classes of the triad (empty for `N`).
    pub fn pitch_classes(self) -> Vec<PitchClass> {
        match self {
            ChordLabel::Triad { root, quality } => {
                let third = if quality == Quality::Major { 4 } else { 3 };
                vec![root, root.transpose(third), root.transpose(7)]
            }
            ChordLabel::NoChord => Vec::new(),
        }
    }
}

impl fmt::Display for ChordLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChordLabel::Triad { root, quality } => {
                let q = match quality {
                    Quality::Major => "maj",
                    Quality::Minor => "min",
                };
                write!(f, "{root}:{q}")
            }
            ChordLabel::NoChord => f.write_str("N"),
        }
    }
}

impl FromStr for ChordLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "N" {
            return Ok(ChordLabel::NoChord);
        }
        let (root, quality) = s.split_once(':').ok_or_else(|| format!("malformed chord label '{s}'"))?;
        let root: PitchClass = root.parse()?;
        let quality = match quality {
            "maj" => Quality::Major,
            "min" => Quality::Minor,
            other => return Err(format!("unknown chord quality '{other}'")),
        };
        Ok(ChordLabel::Triad { root, quality })
    }
}

impl Serialize for ChordLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ChordLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Per-frame pitch-class energies (`frames x 12`, C at column 0).
///
/// Frames with energy are L2-normalised; silent frames stay all-zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Chromagram {
    pub energies: Array2<f64>,
    pub frame_hop_s: f64,
    /// Time of the centre of frame 0's analysis window.
    pub offset_s: f64,
}

impl Chromagram {
    pub fn frame_count(&self) -> usize {
        self.energies.nrows()
    }

    /// Centre time of frame `i`.
    pub fn frame_time(&self, i: usize) -> f64 {
        self.offset_s + i as f64 * self.frame_hop_s
    }

    /// Rotates every frame up by `semitones` pitch classes.
    pub fn rotated(&self, semitones: i32) -> Chromagram {
        let mut out = self.energies.clone();
        for (src, mut dst) in self.energies.rows().into_iter().zip(out.rows_mut()) {
            for pc in 0..12 {
                dst[PitchClass::new(pc as i32 + semitones).index()] = src[pc];
            }
        }
        Chromagram { energies: out, ..self.clone() }
    }

    /// Time-averaged chroma vector.
    pub fn mean_vector(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        if let Some(mean) = self.energies.mean_axis(Axis(0)) {
            for (o, m) in out.iter_mut().zip(mean.iter()) {
                *o = *m;
            }
        }
        out
    }
}

/// Folds spectral peaks between 55 Hz and 1760 Hz onto the nearest pitch
/// class (A4 = 440 Hz). Each local maximum contributes the energy of its
/// three bins at its interpolated frequency, so window leakage stays with
/// the note that caused it.
pub fn chromagram(spec: &Spectrogram) -> Chromagram {
    let mut energies = Array2::<f64>::zeros((spec.frame_count(), 12));
    let bins = spec.bin_count();
    for (row, mut out) in spec.magnitudes.rows().into_iter().zip(energies.rows_mut()) {
        for b in 1..bins.saturating_sub(1) {
            let (l, c, r) = (row[b - 1], row[b], row[b + 1]);
            if !(c > l && c >= r) {
                continue;
            }
            // Quadratic interpolation on log magnitude.
            let (la, lb, lc) = (l.max(1e-12).ln(), c.ln(), r.max(1e-12).ln());
            let denom = la - 2.0 * lb + lc;
            let delta = if denom.abs() > 1e-12 { (0.5 * (la - lc) / denom).clamp(-0.5, 0.5) } else { 0.0 };
            let f = (b as f64 + delta) * spec.bin_hz;
            if !(CHROMA_MIN_HZ..=CHROMA_MAX_HZ).contains(&f) {
                continue;
            }
            let midi = 69.0 + 12.0 * (f / 440.0).log2();
            let pc = (midi.round() as i64).rem_euclid(12) as usize;
            out[pc] += l * l + c * c + r * r;
        }
        let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            out.mapv_inplace(|v| v / norm);
        }
    }
    Chromagram { energies, frame_hop_s: spec.frame_hop_s, offset_s: spec.frame_center(0) }
}
