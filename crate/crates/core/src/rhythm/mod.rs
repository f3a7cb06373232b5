//! Onset detection, tempo estimation, beat and downbeat tracking.
//!
//! All of it hangs off one onset-strength envelope: log-magnitude spectral
//! flux. The log floor is relative to the loudest bin of the track, which
//! makes the envelope (and so everything downstream) independent of gain.

mod beats;
mod tempo;

use serde::{Deserialize, Serialize};

use crate::audio::Spectrogram;

pub use beats::{estimate_downbeats, track_beats, BeatGrid, BeatParams, METER};
pub use tempo::{estimate_tempo, fold_bpm, TempoError, TempoEstimate, TempoParams};

/// Log floor as a fraction of the track's largest magnitude (-80 dB).
const RELATIVE_FLOOR: f64 = 1e-4;
/// Adaptive-threshold median window.
const MEDIAN_WINDOW_S: f64 = 0.4;
/// Weight of the envelope's 95th percentile in the peak threshold.
const THRESHOLD_DELTA: f64 = 0.1;
/// Minimum spacing between reported onsets.
pub const REFRACTORY_S: f64 = 0.05;

/// Half-wave rectified spectral flux, one value per STFT frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnsetEnvelope {
    pub strengths: Vec<f64>,
    pub frame_hop_s: f64,
    /// Time assigned to value 0. Flux of an un-centred window rises when an
    /// event enters the tail of the window, so values are stamped close to
    /// the window's end rather than its start.
    pub offset_s: f64,
    pub duration_s: f64,
}

impl OnsetEnvelope {
    pub fn len(&self) -> usize {
        self.strengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strengths.is_empty()
    }

    pub fn time_of(&self, i: f64) -> f64 {
        self.offset_s + i * self.frame_hop_s
    }

    /// Nearest envelope index to time `t` (clamped).
    pub fn index_of(&self, t: f64) -> usize {
        let i = ((t - self.offset_s) / self.frame_hop_s).round();
        (i.max(0.0) as usize).min(self.len().saturating_sub(1))
    }

    /// Sum of strengths within `radius` frames of index `i`.
    pub fn energy_near(&self, i: usize, radius: usize) -> f64 {
        let lo = i.saturating_sub(radius);
        let hi = (i + radius + 1).min(self.len());
        self.strengths[lo..hi].iter().sum()
    }
}

/// Detected onset times in seconds, strictly increasing.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OnsetList {
    pub times_s: Vec<f64>,
}

impl OnsetList {
    pub fn len(&self) -> usize {
        self.times_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times_s.is_empty()
    }
}

/// Spectral flux of `ln(max(|X|, floor))`, mean over bins, smoothed with a
/// centred 3-frame mean.
pub fn onset_strength(spec: &Spectrogram) -> OnsetEnvelope {
    assert!(!spec.is_empty(), "spectrogram must not be empty");
    let max_mag = spec.magnitudes.iter().fold(0.0_f64, |m, &v| m.max(v));
    let n = spec.frame_count();
    let offset_s = (spec.window_size as f64 - spec.hop as f64 * 0.75) / spec.sample_rate as f64;
    let mut flux = vec![0.0; n];
    if max_mag > 0.0 {
        let floor = RELATIVE_FLOOR * max_mag;
        let bins = spec.bin_count() as f64;
        let log_rows: Vec<Vec<f64>> =
            spec.magnitudes.rows().into_iter().map(|r| r.iter().map(|m| m.max(floor).ln()).collect()).collect();
        for i in 1..n {
            flux[i] = log_rows[i].iter().zip(&log_rows[i - 1]).map(|(a, b)| (a - b).max(0.0)).sum::<f64>() / bins;
        }
    }
    let strengths = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 2).min(n);
            flux[lo..hi].iter().sum::<f64>() / 3.0
        })
        .collect();
    OnsetEnvelope { strengths, frame_hop_s: spec.frame_hop_s, offset_s, duration_s: spec.duration_s }
}

fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn median(values: &[f64]) -> f64 {
    percentile(values, 0.5)
}

/// Peak picking: local maxima above `moving median (0.4 s) + 0.1 * p95`,
/// at least 50 ms apart (the stronger of two close peaks wins).
pub fn detect_onsets(env: &OnsetEnvelope) -> OnsetList {
    let s = &env.strengths;
    let n = s.len();
    if n < 3 {
        return OnsetList::default();
    }
    let delta = THRESHOLD_DELTA * percentile(s, 0.95);
    let half = ((MEDIAN_WINDOW_S / env.frame_hop_s) / 2.0).round().max(1.0) as usize;
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for i in 1..n - 1 {
        // Plateaus report their first frame.
        let is_peak = s[i] > s[i - 1] && s[i] >= s[i + 1];
        if !is_peak {
            continue;
        }
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(n);
        let threshold = median(&s[lo..hi]) + delta;
        if s[i] <= threshold {
            continue;
        }
        let t = env.time_of(i as f64).clamp(0.0, env.duration_s);
        match peaks.last_mut() {
            Some(last) if t - last.0 < REFRACTORY_S => {
                if s[i] > last.1 {
                    *last = (t, s[i]);
                }
            }
            _ => peaks.push((t, s[i])),
        }
    }
    let mut times: Vec<f64> = Vec::with_capacity(peaks.len());
    for (t, _) in peaks {
        if times.last().is_none_or(|&p| t > p) {
            times.push(t);
        }
    }
    OnsetList { times_s: times }
}
