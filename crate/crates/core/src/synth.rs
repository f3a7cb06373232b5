//! Deterministic test-signal generators.
//!
//! Click tracks, triads, filtered noise and small synthetic "songs" whose
//! ground truth (beat times, chord labels, change points) is known by
//! construction. Used by the test suites, benchmarks and demo fixtures.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::audio::AudioClip;
use crate::harmony::{ChordLabel, PitchClass, Quality};

/// Frequency of a MIDI note number (A4 = 69 = 440 Hz).
pub fn midi_to_hz(midi: f64) -> f64 {
    440.0 * 2f64.powf((midi - 69.0) / 12.0)
}

pub fn silence(secs: f64, sr: u32) -> Vec<f64> {
    vec![0.0; (secs * sr as f64).round() as usize]
}

pub fn sine(freq: f64, amp: f64, secs: f64, sr: u32) -> Vec<f64> {
    (0..(secs * sr as f64).round() as usize).map(|i| amp * (2.0 * PI * freq * i as f64 / sr as f64).sin()).collect()
}

/// Sum of equal-amplitude sines; `amp` is the per-tone amplitude.
pub fn tones(freqs: &[f64], amp: f64, secs: f64, sr: u32) -> Vec<f64> {
    let n = (secs * sr as f64).round() as usize;
    (0..n)
        .map(|i| {
            let t = i as f64 / sr as f64;
            freqs.iter().map(|f| amp * (2.0 * PI * f * t).sin()).sum()
        })
        .collect()
}

/// MIDI notes of a root-position triad with its root in octave 4 (C4..B4).
pub fn triad_midi(root: PitchClass, quality: Quality) -> [f64; 3] {
    let r = 60.0 + root.index() as f64;
    let third = match quality {
        Quality::Major => 4.0,
        Quality::Minor => 3.0,
    };
    [r, r + third, r + 7.0]
}

pub fn triad_freqs(root: PitchClass, quality: Quality) -> [f64; 3] {
    triad_midi(root, quality).map(midi_to_hz)
}

/// Sustained triad with short fades so segment edges do not click.
pub fn triad(root: PitchClass, quality: Quality, amp: f64, secs: f64, sr: u32) -> Vec<f64> {
    let mut out = tones(&triad_freqs(root, quality), amp, secs, sr);
    fade(&mut out, (0.005 * sr as f64) as usize);
    out
}

/// Concatenated sustained triads; `None` renders silence.
pub fn chord_sequence(chords: &[(ChordLabel, f64)], amp: f64, sr: u32) -> Vec<f64> {
    let mut out = Vec::new();
    for (label, secs) in chords {
        match label {
            ChordLabel::Triad { root, quality } => out.extend(triad(*root, *quality, amp, *secs, sr)),
            ChordLabel::NoChord => out.extend(silence(*secs, sr)),
        }
    }
    out
}

fn fade(samples: &mut [f64], len: usize) {
    let n = samples.len();
    let len = len.min(n / 2);
    for i in 0..len {
        let g = i as f64 / len as f64;
        samples[i] *= g;
        samples[n - 1 - i] *= g;
    }
}

/// Decaying white-noise burst (about 10 ms), deterministic.
pub fn click(amp: f64, sr: u32) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC11C);
    let n = (0.010 * sr as f64) as usize;
    let tau = 0.002 * sr as f64;
    (0..n).map(|i| amp * (-(i as f64) / tau).exp() * rng.random_range(-1.0..1.0)).collect()
}

/// Options for [`click_track`].
#[derive(Debug, Clone)]
pub struct ClickTrack {
    pub bpm: f64,
    pub secs: f64,
    pub amp: f64,
    /// Time of the first click.
    pub start_s: f64,
    /// Every `n`-th click (starting with `accent_phase`) gets `accent_gain` × amplitude.
    pub accent_every: Option<usize>,
    pub accent_phase: usize,
    pub accent_gain: f64,
}

impl ClickTrack {
    pub fn new(bpm: f64, secs: f64) -> Self {
        Self { bpm, secs, amp: 0.4, start_s: 0.1, accent_every: None, accent_phase: 0, accent_gain: 2.0 }
    }

    /// Click onset times.
    pub fn times(&self) -> Vec<f64> {
        let period = 60.0 / self.bpm;
        let mut out = Vec::new();
        let mut t = self.start_s;
        while t < self.secs - 0.02 {
            out.push(t);
            t += period;
        }
        out
    }

    pub fn render(&self, sr: u32) -> Vec<f64> {
        let mut out = silence(self.secs, sr);
        for (i, t) in self.times().into_iter().enumerate() {
            let accented = self.accent_every.is_some_and(|n| i % n == self.accent_phase % n);
            let amp = if accented { self.amp * self.accent_gain } else { self.amp };
            mix_at(&mut out, &click(amp, sr), t, sr);
        }
        out
    }

    pub fn clip(&self, sr: u32) -> AudioClip {
        AudioClip::from_mono(self.render(sr), sr)
    }
}

/// Adds `src` into `dst` starting at time `t`, truncating at the end of `dst`.
pub fn mix_at(dst: &mut [f64], src: &[f64], t: f64, sr: u32) {
    let start = (t * sr as f64).round() as usize;
    for (i, s) in src.iter().enumerate() {
        if let Some(d) = dst.get_mut(start + i) {
            *d += s;
        }
    }
}

pub fn white_noise(amp: f64, secs: f64, sr: u32, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..(secs * sr as f64).round() as usize).map(|_| amp * rng.random_range(-1.0..1.0)).collect()
}

/// Brick-wall band filter via FFT; keeps components with `lo <= f < hi`.
pub fn band_filter(samples: &[f64], sr: u32, lo: f64, hi: f64) -> Vec<f64> {
    let n = samples.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::<f64>::new();
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&s| Complex::new(s, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let f = k.min(n - k) as f64 * sr as f64 / n as f64;
        if f < lo || f >= hi {
            *c = Complex::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

/// White noise band-limited to `[lo, hi)` and rescaled to the given RMS.
pub fn filtered_noise(lo: f64, hi: f64, rms: f64, secs: f64, sr: u32, seed: u64) -> Vec<f64> {
    let raw = white_noise(1.0, secs, sr, seed);
    let mut out = band_filter(&raw, sr, lo, hi);
    let cur = (out.iter().map(|s| s * s).sum::<f64>() / out.len().max(1) as f64).sqrt();
    if cur > 0.0 {
        for s in &mut out {
            *s *= rms / cur;
        }
    }
    out
}

fn kick(amp: f64, sr: u32) -> Vec<f64> {
    let n = (0.15 * sr as f64) as usize;
    let mut phase = 0.0;
    (0..n)
        .map(|i| {
            let t = i as f64 / sr as f64;
            let f = 50.0 + 100.0 * (-t / 0.03).exp();
            phase += 2.0 * PI * f / sr as f64;
            amp * (-t / 0.06).exp() * phase.sin()
        })
        .collect()
}

fn noise_burst(amp: f64, secs: f64, decay_s: f64, lo: f64, sr: u32, seed: u64) -> Vec<f64> {
    let raw = white_noise(1.0, secs, sr, seed);
    let filtered = if lo > 0.0 { band_filter(&raw, sr, lo, sr as f64) } else { raw };
    filtered.iter().enumerate().map(|(i, s)| amp * s * (-(i as f64 / sr as f64) / decay_s).exp()).collect()
}

fn sawtooth(freq: f64, amp: f64, secs: f64, sr: u32) -> Vec<f64> {
    // Band-limited: sum the first harmonics below Nyquist.
    let n = (secs * sr as f64).round() as usize;
    let harmonics = ((sr as f64 / 2.0) / freq).floor().min(20.0) as usize;
    (0..n)
        .map(|i| {
            let t = i as f64 / sr as f64;
            (1..=harmonics).map(|h| (2.0 * PI * freq * h as f64 * t).sin() / h as f64).sum::<f64>() * amp * 0.6
        })
        .collect()
}

/// Drum pattern over `bars` 4/4 bars: kick on every beat (`four_on_floor`)
/// or beats 1 and 3, snare on 2 and 4, hats on eighths.
pub fn drum_loop(bpm: f64, bars: usize, four_on_floor: bool, amp: f64, sr: u32) -> Vec<f64> {
    let beat = 60.0 / bpm;
    let secs = bars as f64 * 4.0 * beat;
    let mut out = silence(secs, sr);
    let k = kick(amp, sr);
    let snare = noise_burst(amp * 0.5, 0.12, 0.04, 1000.0, sr, 11);
    let hat = noise_burst(amp * 0.25, 0.05, 0.012, 6000.0, sr, 12);
    for b in 0..bars * 4 {
        let t = b as f64 * beat;
        if four_on_floor || b % 2 == 0 {
            mix_at(&mut out, &k, t, sr);
        }
        if b % 4 == 1 || b % 4 == 3 {
            mix_at(&mut out, &snare, t, sr);
        }
        mix_at(&mut out, &hat, t, sr);
        mix_at(&mut out, &hat, t + beat / 2.0, sr);
    }
    out
}

/// Sums equal-length-or-shorter layers into a buffer of the longest length.
pub fn mix(layers: &[&[f64]]) -> Vec<f64> {
    let n = layers.iter().map(|l| l.len()).max().unwrap_or(0);
    let mut out = vec![0.0; n];
    for layer in layers {
        for (o, s) in out.iter_mut().zip(layer.iter()) {
            *o += s;
        }
    }
    out
}

/// Scales the buffer so its peak is `peak`.
pub fn normalize_peak(samples: &mut [f64], peak: f64) {
    let cur = samples.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
    if cur > 0.0 {
        for s in samples {
            *s *= peak / cur;
        }
    }
}

/// A small pop arrangement: drums, a bass line and a triad pad following
/// `progression` (one chord per bar), repeated to fill `bars` bars.
pub fn pop_loop(bpm: f64, bars: usize, progression: &[ChordLabel], sr: u32) -> Vec<f64> {
    let beat = 60.0 / bpm;
    let bar = 4.0 * beat;
    let drums = drum_loop(bpm, bars, false, 0.5, sr);
    let mut pad = Vec::new();
    let mut bass = Vec::new();
    for i in 0..bars {
        match progression[i % progression.len()] {
            ChordLabel::Triad { root, quality } => {
                pad.extend(triad(root, quality, 0.12, bar, sr));
                let mut b = sine(midi_to_hz(36.0 + root.index() as f64), 0.3, bar, sr);
                fade(&mut b, (0.01 * sr as f64) as usize);
                bass.extend(b);
            }
            ChordLabel::NoChord => {
                pad.extend(silence(bar, sr));
                bass.extend(silence(bar, sr));
            }
        }
    }
    let mut out = mix(&[&drums, &pad, &bass]);
    normalize_peak(&mut out, 0.8);
    out
}

/// Four-on-the-floor electronic loop: kicks on every beat, bright off-beat
/// hats, a sawtooth bass stab.
pub fn electronic_loop(bpm: f64, bars: usize, sr: u32) -> Vec<f64> {
    let beat = 60.0 / bpm;
    let secs = bars as f64 * 4.0 * beat;
    let drums = drum_loop(bpm, bars, true, 0.6, sr);
    let mut hats = silence(secs, sr);
    let open_hat = noise_burst(0.35, 0.1, 0.03, 7000.0, sr, 21);
    for b in 0..bars * 4 {
        mix_at(&mut hats, &open_hat, b as f64 * beat + beat / 2.0, sr);
    }
    let saw = sawtooth(midi_to_hz(45.0), 0.25, secs, sr);
    let mut out = mix(&[&drums, &hats, &saw]);
    normalize_peak(&mut out, 0.8);
    out
}

/// Quiet triad arpeggio in eighth notes over `bars` bars.
pub fn arpeggio(root: PitchClass, quality: Quality, bpm: f64, bars: usize, amp: f64, sr: u32) -> Vec<f64> {
    let eighth = 30.0 / bpm;
    let notes = triad_midi(root, quality);
    let mut out = Vec::new();
    for i in 0..bars * 8 {
        let f = midi_to_hz(notes[i % 3] + if i % 6 >= 3 { 12.0 } else { 0.0 });
        let mut note = sine(f, amp, eighth, sr);
        let n = note.len();
        for (j, s) in note.iter_mut().enumerate() {
            let t = j as f64 / sr as f64;
            *s *= (-t / 0.15).exp() * (1.0 - (j as f64 / n as f64).powi(8));
        }
        out.extend(note);
    }
    out
}

/// Ground truth of a [`two_part_track`].
#[derive(Debug, Clone)]
pub struct TwoPartTrack {
    pub samples: Vec<f64>,
    pub change_s: f64,
    pub bpm: f64,
}

/// Quiet arpeggio for `bars_a` bars, then a loud noise-and-drums block for
/// `bars_b` bars. The change point falls exactly on a bar line.
pub fn two_part_track(bpm: f64, bars_a: usize, bars_b: usize, root: PitchClass, sr: u32, seed: u64) -> TwoPartTrack {
    let a = arpeggio(root, Quality::Major, bpm, bars_a, 0.15, sr);
    let secs_b = bars_b as f64 * 4.0 * 60.0 / bpm;
    let drums = drum_loop(bpm, bars_b, true, 0.7, sr);
    let noise = white_noise(0.12, secs_b, sr, seed);
    let b = mix(&[&drums, &noise]);
    let change_s = a.len() as f64 / sr as f64;
    let mut samples = a;
    samples.extend(b);
    TwoPartTrack { samples, change_s, bpm }
}

/// A–B–A form: arpeggio, noise-and-drums, arpeggio again.
pub fn aba_track(bpm: f64, bars: usize, sr: u32) -> Vec<f64> {
    let a = arpeggio(PitchClass::C, Quality::Major, bpm, bars, 0.15, sr);
    let secs_b = bars as f64 * 4.0 * 60.0 / bpm;
    let b = mix(&[&drum_loop(bpm, bars, true, 0.7, sr), &white_noise(0.12, secs_b, sr, 99)]);
    let mut out = a.clone();
    out.extend(b);
    out.extend(a);
    out
}
