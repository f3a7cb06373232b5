use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::OnsetEnvelope;

/// Reported tempi lie in `[MIN_BPM, MAX_BPM)`.
pub const MIN_BPM: f64 = 60.0;
pub const MAX_BPM: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TempoParams {
    /// Centre of the log-normal tempo prior.
    pub prior_center_bpm: f64,
    /// Prior width in octaves (log2 domain).
    pub prior_sigma_octaves: f64,
    /// Below this normalised autocorrelation the track has no usable pulse.
    pub min_confidence: f64,
    /// Below this mean envelope value the track is treated as having no
    /// onsets at all (the envelope is gain-independent, so this is absolute).
    pub min_salience: f64,
    /// Candidate periods searched before folding, as BPM bounds.
    pub search_min_bpm: f64,
    pub search_max_bpm: f64,
}

impl Default for TempoParams {
    fn default() -> Self {
        Self {
            prior_center_bpm: 110.0,
            prior_sigma_octaves: 0.4,
            min_confidence: 0.1,
            min_salience: 0.02,
            search_min_bpm: 30.0,
            search_max_bpm: 420.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TempoEstimate {
    pub bpm: f64,
    /// Normalised autocorrelation at the chosen period, in `[0, 1]`.
    pub confidence: f64,
}

impl TempoEstimate {
    /// Beat period in seconds.
    pub fn period_s(&self) -> f64 {
        60.0 / self.bpm
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum TempoError {
    #[error("no rhythmic content (confidence {confidence:.3})")]
    NoRhythmicContent { confidence: f64 },
}

/// Maps a tempo into `[60, 200)` by octave steps.
///
/// Values less than one BPM under 60 are snapped to 60 rather than doubled,
/// so lag quantisation at the lower edge cannot flip an estimate an octave up.
pub fn fold_bpm(bpm: f64) -> f64 {
    assert!(bpm > 0.0 && bpm.is_finite(), "bpm must be positive");
    let mut b = bpm;
    while b >= MAX_BPM {
        b /= 2.0;
    }
    while b < MIN_BPM - 1.0 {
        b *= 2.0;
    }
    b.max(MIN_BPM)
}

fn prior(bpm: f64, params: &TempoParams) -> f64 {
    let z = (bpm / params.prior_center_bpm).log2() / params.prior_sigma_octaves;
    (-0.5 * z * z).exp()
}

/// Mean-removed autocorrelation with unbiased scaling, normalised by lag 0.
fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let r0 = d.iter().map(|v| v * v).sum::<f64>() / n as f64;
    (0..=max_lag.min(n - 1))
        .map(|lag| {
            if r0 <= 0.0 {
                return 0.0;
            }
            let s: f64 = d[..n - lag].iter().zip(&d[lag..]).map(|(a, b)| a * b).sum();
            s / (n - lag) as f64 / r0
        })
        .collect()
}

fn interp(r: &[f64], pos: f64) -> f64 {
    let i = pos.floor() as usize;
    if i + 1 >= r.len() {
        return r.last().copied().unwrap_or(0.0);
    }
    let f = pos - i as f64;
    r[i] * (1.0 - f) + r[i + 1] * f
}

/// Vertex of the parabola through `r[i-1], r[i], r[i+1]`.
fn parabolic_peak(r: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 >= r.len() {
        return i as f64;
    }
    let (a, b, c) = (r[i - 1], r[i], r[i + 1]);
    let denom = a - 2.0 * b + c;
    if denom.abs() < 1e-12 {
        i as f64
    } else {
        i as f64 + (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    }
}

/// Autocorrelation tempo with a log-normal prior and octave folding.
///
/// Candidate periods come from the enhanced autocorrelation
/// `max(0, r(L) - max_k r(L/k))` for `k` in 2..=5, which suppresses the peaks
/// a pulse produces at multiples of its own period; each candidate is scored
/// by that value times the prior at its folded tempo. The winner's period is then refined from
/// the positions of its harmonics `k * L`.
pub fn estimate_tempo(env: &OnsetEnvelope, params: &TempoParams) -> Result<TempoEstimate, TempoError> {
    let hop = env.frame_hop_s;
    let n = env.len();
    let min_lag = ((60.0 / params.search_max_bpm) / hop).floor().max(2.0) as usize;
    let max_lag = ((60.0 / params.search_min_bpm) / hop).ceil() as usize;
    if n < 2 * min_lag + 2 {
        return Err(TempoError::NoRhythmicContent { confidence: 0.0 });
    }
    let salience = env.strengths.iter().sum::<f64>() / n as f64;
    if salience < params.min_salience {
        return Err(TempoError::NoRhythmicContent { confidence: 0.0 });
    }
    let refine_lag = ((8.0 / hop).ceil() as usize).max(max_lag).min(n / 2);
    let r = autocorrelation(&env.strengths, refine_lag.max(max_lag));
    let top = max_lag.min(r.len() - 2);

    let enhanced: Vec<f64> = (0..=top + 1)
        .map(|lag| {
            let sub = (2..=5).map(|k| interp(&r, lag as f64 / k as f64)).fold(0.0, f64::max);
            (r[lag] - sub).max(0.0)
        })
        .collect();

    let mut best: Option<(f64, f64)> = None; // (score, lag)
    for lag in min_lag.max(1)..=top {
        let e = enhanced[lag];
        if e <= 0.0 || e < enhanced[lag - 1] || e < enhanced[lag + 1] {
            continue;
        }
        let pos = parabolic_peak(&r, lag);
        let bpm = fold_bpm(60.0 / (pos * hop));
        let score = e * prior(bpm, params);
        if best.is_none_or(|(s, _)| score > s) {
            best = Some((score, pos));
        }
    }
    let Some((_, lag0)) = best else {
        return Err(TempoError::NoRhythmicContent { confidence: 0.0 });
    };
    let confidence = interp(&r, lag0).clamp(0.0, 1.0);
    if confidence < params.min_confidence {
        return Err(TempoError::NoRhythmicContent { confidence });
    }

    // Least-squares period through the origin over harmonic peak positions.
    let (mut num, mut den) = (lag0, 1.0);
    let mut k = 2.0;
    while k * lag0 + 3.0 < r.len() as f64 {
        let centre = (k * lag0).round() as usize;
        let lo = centre.saturating_sub(2).max(1);
        let hi = (centre + 2).min(r.len() - 2);
        let peak = (lo..=hi).fold(lo, |b, i| if r[i] > r[b] { i } else { b });
        if r[peak] >= 0.5 * confidence {
            let pos = parabolic_peak(&r, peak);
            num += k * pos;
            den += k * k;
        }
        k += 1.0;
    }
    let period = num / den;
    Ok(TempoEstimate { bpm: fold_bpm(60.0 / (period * hop)), confidence })
}
