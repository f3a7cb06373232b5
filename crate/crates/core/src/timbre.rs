//! Seven 0-100 timbral descriptors from transparent spectral heuristics.
//!
//! Each raw measure is a ratio or a peak-normalised slope, so scores do not
//! move with global gain. Raw values map to scores through `100 x / (x + k)`.

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::audio::{AudioClip, Spectrogram};

/// Squashing constants: the raw value that maps to a score of 50.
///
/// Defaults were set so the bundled synthetic pop loop
/// ([`crate::synth::pop_loop`]) scores close to 50 on each attribute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimbreParams {
    pub brightness_k: f64,
    pub warmth_k: f64,
    pub depth_k: f64,
    pub hardness_k: f64,
    pub roughness_k: f64,
    pub sharpness_k: f64,
    pub boominess_k: f64,
}

impl Default for TimbreParams {
    fn default() -> Self {
        Self {
            brightness_k: 0.1,
            warmth_k: 0.4,
            depth_k: 0.65,
            hardness_k: 5.5,
            roughness_k: 0.012,
            sharpness_k: 0.004,
            boominess_k: 0.15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TimbralProfile {
    pub brightness: f64,
    pub warmth: f64,
    pub depth: f64,
    pub hardness: f64,
    pub roughness: f64,
    pub sharpness: f64,
    pub boominess: f64,
}

impl TimbralProfile {
    /// `(name, score)` pairs in a fixed order.
    pub fn entries(&self) -> [(&'static str, f64); 7] {
        [
            ("brightness", self.brightness),
            ("warmth", self.warmth),
            ("depth", self.depth),
            ("hardness", self.hardness),
            ("roughness", self.roughness),
            ("sharpness", self.sharpness),
            ("boominess", self.boominess),
        ]
    }
}

/// Unsquashed measures behind a [`TimbralProfile`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RawTimbre {
    /// Energy-weighted mean spectral centroid over Nyquist.
    pub centroid_ratio: f64,
    /// Energy share of 100-500 Hz.
    pub low_mid_ratio: f64,
    /// Energy share below 120 Hz.
    pub sub_ratio: f64,
    /// Mean of the steepest decile of rises in the peak-normalised RMS
    /// envelope, per second.
    pub attack_slope: f64,
    /// Share of amplitude-envelope energy modulated at 20-150 Hz.
    pub modulation_ratio: f64,
    /// Energy share above 5 kHz.
    pub high_ratio: f64,
    /// Energy share of 20-200 Hz times the share of that band held by its
    /// strongest bin.
    pub resonant_bass: f64,
}

fn squash(x: f64, k: f64) -> f64 {
    if x <= 0.0 || !x.is_finite() {
        0.0
    } else {
        (100.0 * x / (x + k)).clamp(0.0, 100.0)
    }
}

/// Computes the raw measures; all zero for silence.
pub fn raw_timbre(clip: &AudioClip, spec: &Spectrogram) -> RawTimbre {
    let power: Vec<f64> = {
        let mut p = vec![0.0; spec.bin_count()];
        for row in spec.magnitudes.rows() {
            for (acc, m) in p.iter_mut().zip(row.iter()) {
                *acc += m * m;
            }
        }
        p
    };
    let total: f64 = power.iter().sum();
    if total <= 0.0 {
        return RawTimbre::default();
    }
    let band = |lo: f64, hi: f64| -> Vec<f64> {
        power
            .iter()
            .enumerate()
            .filter(|(b, _)| {
                let f = spec.bin_frequency(*b);
                f >= lo && f < hi
            })
            .map(|(_, p)| *p)
            .collect()
    };
    let share = |lo: f64, hi: f64| band(lo, hi).iter().sum::<f64>() / total;

    let nyquist = spec.sample_rate as f64 / 2.0;
    let (mut weighted, mut weight) = (0.0, 0.0);
    for row in spec.magnitudes.rows() {
        let mag: f64 = row.iter().sum();
        if mag <= 0.0 {
            continue;
        }
        let centroid = row.iter().enumerate().map(|(b, m)| spec.bin_frequency(b) * m).sum::<f64>() / mag;
        let energy: f64 = row.iter().map(|m| m * m).sum();
        weighted += centroid * energy;
        weight += energy;
    }

    let bass = band(20.0, 200.0);
    let bass_total: f64 = bass.iter().sum();
    let resonant_bass =
        if bass_total > 0.0 { bass_total / total * bass.iter().cloned().fold(0.0, f64::max) / bass_total } else { 0.0 };

    RawTimbre {
        centroid_ratio: weighted / weight / nyquist,
        low_mid_ratio: share(100.0, 500.0),
        sub_ratio: share(0.0, 120.0),
        attack_slope: attack_slope(spec),
        modulation_ratio: modulation_ratio(clip),
        high_ratio: share(5000.0, f64::INFINITY),
        resonant_bass,
    }
}

fn attack_slope(spec: &Spectrogram) -> f64 {
    let rms: Vec<f64> =
        spec.magnitudes.rows().into_iter().map(|r| r.iter().map(|m| m * m).sum::<f64>().sqrt()).collect();
    let peak = rms.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 || rms.len() < 2 {
        return 0.0;
    }
    let mut rises: Vec<f64> =
        rms.windows(2).map(|w| (w[1] - w[0]) / peak / spec.frame_hop_s).filter(|d| *d > 0.0).collect();
    if rises.is_empty() {
        return 0.0;
    }
    rises.sort_by(|a, b| b.total_cmp(a));
    let top = (rises.len() / 10).max(1);
    rises[..top].iter().sum::<f64>() / top as f64
}

const ENV_WINDOW: usize = 128;
const ENV_HOP: usize = 32;

fn modulation_ratio(clip: &AudioClip) -> f64 {
    let x = clip.samples();
    if x.len() < ENV_WINDOW * 4 {
        return 0.0;
    }
    let env: Vec<f64> = (0..=(x.len() - ENV_WINDOW) / ENV_HOP)
        .map(|i| {
            let w = &x[i * ENV_HOP..i * ENV_HOP + ENV_WINDOW];
            (w.iter().map(|s| s * s).sum::<f64>() / ENV_WINDOW as f64).sqrt()
        })
        .collect();
    let energy: f64 = env.iter().map(|v| v * v).sum();
    if energy <= 0.0 {
        return 0.0;
    }
    let mean = env.iter().sum::<f64>() / env.len() as f64;
    let mut buf: Vec<Complex<f64>> = env.iter().map(|v| Complex::new(v - mean, 0.0)).collect();
    let n = buf.len();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let rate = clip.sample_rate() as f64 / ENV_HOP as f64;
    // Parseval: sum |X_k|^2 / n over all bins equals the time-domain energy.
    let band: f64 = buf
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let f = (*k.min(&(n - k))) as f64 * rate / n as f64;
            (20.0..=150.0).contains(&f)
        })
        .map(|(_, c)| c.norm_sqr())
        .sum();
    band / n as f64 / energy
}

/// Scores a mono clip and its spectrogram.
pub fn timbral_descriptors(clip: &AudioClip, spec: &Spectrogram, params: &TimbreParams) -> TimbralProfile {
    assert!(clip.is_mono(), "timbre analysis expects a mono clip");
    let r = raw_timbre(clip, spec);
    TimbralProfile {
        brightness: squash(r.centroid_ratio, params.brightness_k),
        warmth: squash(r.low_mid_ratio, params.warmth_k),
        depth: squash(r.sub_ratio, params.depth_k),
        hardness: squash(r.attack_slope, params.hardness_k),
        roughness: squash(r.modulation_ratio, params.roughness_k),
        sharpness: squash(r.high_ratio, params.sharpness_k),
        boominess: squash(r.resonant_bass, params.boominess_k),
    }
}
