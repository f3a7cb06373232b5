use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::audio::{stft, AudioClip, HOP_SIZE, WINDOW_SIZE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstrumentName {
    Drums,
    Bass,
    Harmonic,
}

impl InstrumentName {
    pub fn as_str(self) -> &'static str {
        match self {
            InstrumentName::Drums => "drums",
            InstrumentName::Bass => "bass",
            InstrumentName::Harmonic => "harmonic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstrumentTag {
    pub name: InstrumentName,
    pub confidence: f64,
}

/// Energy-ratio thresholds at which each tag reaches confidence 0.5.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InstrumentThresholds {
    /// Percussive share of total energy.
    pub drums: f64,
    /// Harmonic energy below [`Self::bass_cutoff_hz`] as a share of total energy.
    pub bass: f64,
    pub bass_cutoff_hz: f64,
    /// Harmonic share of total energy.
    pub harmonic: f64,
}

impl Default for InstrumentThresholds {
    fn default() -> Self {
        Self { drums: 0.25, bass: 0.15, bass_cutoff_hz: 250.0, harmonic: 0.3 }
    }
}

/// Median-filter length for harmonic/percussive separation, frames and bins.
const MEDIAN_LEN: usize = 17;

fn median(v: &mut [f64]) -> f64 {
    let mid = v.len() / 2;
    *v.select_nth_unstable_by(mid, f64::total_cmp).1
}

/// Median filters along time (harmonic) and along frequency (percussive).
fn hpss(mag: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let (frames, bins) = mag.dim();
    let half = MEDIAN_LEN / 2;
    let mut h = Array2::zeros((frames, bins));
    let mut p = Array2::zeros((frames, bins));
    let mut buf = Vec::with_capacity(MEDIAN_LEN);
    for t in 0..frames {
        for b in 0..bins {
            buf.clear();
            for k in t.saturating_sub(half)..(t + half + 1).min(frames) {
                buf.push(mag[[k, b]]);
            }
            h[[t, b]] = median(&mut buf);
            buf.clear();
            for k in b.saturating_sub(half)..(b + half + 1).min(bins) {
                buf.push(mag[[t, k]]);
            }
            p[[t, b]] = median(&mut buf);
        }
    }
    (h, p)
}

/// Coarse drums / bass / harmonic detection from harmonic-percussive
/// separation with Wiener-style soft masks.
///
/// Each tag's confidence is its energy ratio divided by twice its threshold,
/// clipped to `[0, 1]`; tags below 0.5 are dropped. Output is sorted by name.
pub fn detect_instruments(clip: &AudioClip, thresholds: &InstrumentThresholds) -> Vec<InstrumentTag> {
    assert!(clip.is_mono(), "instrument detection expects a mono clip");
    let spec = stft(clip, WINDOW_SIZE, HOP_SIZE);
    let mag = &spec.magnitudes;
    let (h, p) = hpss(mag);
    let (mut total, mut harm, mut perc, mut low_harm) = (0.0, 0.0, 0.0, 0.0);
    for ((idx, &m), (&hv, &pv)) in mag.indexed_iter().zip(h.iter().zip(p.iter())) {
        let e = m * m;
        if e == 0.0 {
            continue;
        }
        let (h2, p2) = (hv * hv, pv * pv);
        let mask = if h2 + p2 > 0.0 { h2 / (h2 + p2) } else { 0.5 };
        total += e;
        harm += mask * e;
        perc += (1.0 - mask) * e;
        if spec.bin_frequency(idx.1) < thresholds.bass_cutoff_hz {
            low_harm += mask * e;
        }
    }
    if total <= 0.0 {
        return Vec::new();
    }
    let confidence = |ratio: f64, threshold: f64| (ratio / (2.0 * threshold)).clamp(0.0, 1.0);
    [
        (InstrumentName::Drums, confidence(perc / total, thresholds.drums)),
        (InstrumentName::Bass, confidence(low_harm / total, thresholds.bass)),
        (InstrumentName::Harmonic, confidence(harm / total, thresholds.harmonic)),
    ]
    .into_iter()
    .filter(|(_, c)| *c >= 0.5)
    .map(|(name, confidence)| InstrumentTag { name, confidence })
    .collect()
}
