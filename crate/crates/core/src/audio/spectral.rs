use std::f64::consts::PI;

use ndarray::{Array2, Axis};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::AudioClip;

/// Log floor applied to mel energies before the DCT.
const MEL_LOG_FLOOR: f64 = 1e-10;

/// Magnitude STFT of a mono clip. Rows are frames, columns are bins `0..=window/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub magnitudes: Array2<f64>,
    pub frame_hop_s: f64,
    pub bin_hz: f64,
    pub window_size: usize,
    pub hop: usize,
    pub sample_rate: u32,
    /// Length of the analysed clip.
    pub duration_s: f64,
}

impl Spectrogram {
    pub fn frame_count(&self) -> usize {
        self.magnitudes.nrows()
    }

    pub fn bin_count(&self) -> usize {
        self.magnitudes.ncols()
    }

    /// Start time of frame `i` (`i * frame_hop_s`).
    pub fn frame_time(&self, i: usize) -> f64 {
        i as f64 * self.frame_hop_s
    }

    /// Time of the centre of frame `i`'s window.
    pub fn frame_center(&self, i: usize) -> f64 {
        (i * self.hop) as f64 / self.sample_rate as f64 + self.window_size as f64 / (2.0 * self.sample_rate as f64)
    }

    pub fn bin_frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_hz
    }

    pub fn is_empty(&self) -> bool {
        self.magnitudes.is_empty()
    }
}

/// Periodic Hann window.
pub(crate) fn hann(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect()
}

/// Hann-windowed magnitude STFT without centring.
///
/// A clip of `len >= window_size` samples yields
/// `1 + (len - window_size) / hop` frames; shorter clips are zero-padded to
/// a single frame.
pub fn stft(clip: &AudioClip, window_size: usize, hop: usize) -> Spectrogram {
    assert!(window_size >= hop && hop >= 1, "need window_size >= hop >= 1");
    let samples = clip.samples();
    stft_samples(samples, clip.sample_rate(), window_size, hop)
}

pub(crate) fn stft_samples(samples: &[f64], sample_rate: u32, window_size: usize, hop: usize) -> Spectrogram {
    let frames = if samples.len() >= window_size { 1 + (samples.len() - window_size) / hop } else { 1 };
    let bins = window_size / 2 + 1;
    let window = hann(window_size);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(window_size);
    let mut magnitudes = Array2::<f64>::zeros((frames, bins));
    let mut buf = vec![Complex::new(0.0, 0.0); window_size];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for (f, mut row) in magnitudes.axis_iter_mut(Axis(0)).enumerate() {
        let start = f * hop;
        for (i, slot) in buf.iter_mut().enumerate() {
            let s = samples.get(start + i).copied().unwrap_or(0.0);
            *slot = Complex::new(s * window[i], 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (b, m) in row.iter_mut().enumerate() {
            *m = buf[b].norm();
        }
    }
    Spectrogram {
        magnitudes,
        frame_hop_s: hop as f64 / sample_rate as f64,
        bin_hz: sample_rate as f64 / window_size as f64,
        window_size,
        hop,
        sample_rate,
        duration_s: samples.len() as f64 / sample_rate as f64,
    }
}

/// Per-frame cepstral coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct MfccMatrix {
    pub coefficients: Array2<f64>,
    pub frame_hop_s: f64,
}

impl MfccMatrix {
    pub fn frame_count(&self) -> usize {
        self.coefficients.nrows()
    }
}

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular mel filterbank, `n_mels x bins`, spanning 0 Hz to Nyquist.
pub fn mel_filterbank(n_mels: usize, bins: usize, bin_hz: f64) -> Array2<f64> {
    let nyquist = (bins - 1) as f64 * bin_hz;
    let top = hz_to_mel(nyquist);
    let edges: Vec<f64> = (0..n_mels + 2).map(|i| mel_to_hz(top * i as f64 / (n_mels + 1) as f64)).collect();
    let mut bank = Array2::<f64>::zeros((n_mels, bins));
    for m in 0..n_mels {
        let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        for b in 0..bins {
            let f = b as f64 * bin_hz;
            let w = if f > lo && f <= mid {
                (f - lo) / (mid - lo)
            } else if f > mid && f < hi {
                (hi - f) / (hi - mid)
            } else {
                0.0
            };
            bank[[m, b]] = w;
        }
    }
    bank
}

/// MFCCs: orthonormal DCT-II of `ln(max(mel power, 1e-10))`, first `n_mfcc` kept.
pub fn mfcc(spec: &Spectrogram, n_mels: usize, n_mfcc: usize) -> MfccMatrix {
    assert!(n_mfcc <= n_mels, "n_mfcc must not exceed n_mels");
    let bank = mel_filterbank(n_mels, spec.bin_count(), spec.bin_hz);
    let power = spec.magnitudes.mapv(|m| m * m);
    let mel = power.dot(&bank.t()).mapv(|e| e.max(MEL_LOG_FLOOR).ln());
    let mut dct = Array2::<f64>::zeros((n_mels, n_mfcc));
    for k in 0..n_mfcc {
        let scale = if k == 0 { (1.0 / n_mels as f64).sqrt() } else { (2.0 / n_mels as f64).sqrt() };
        for n in 0..n_mels {
            dct[[n, k]] = scale * (PI * k as f64 * (n as f64 + 0.5) / n_mels as f64).cos();
        }
    }
    MfccMatrix { coefficients: mel.dot(&dct), frame_hop_s: spec.frame_hop_s }
}
