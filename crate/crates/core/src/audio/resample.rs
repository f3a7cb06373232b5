use std::f64::consts::PI;

use super::AudioClip;

/// Zero crossings of the sinc kernel on each side, at the output bandwidth.
const KERNEL_ZEROS: f64 = 16.0;
/// Passband edge as a fraction of the lower Nyquist frequency.
const ROLLOFF: f64 = 0.95;
/// Largest phase table we precompute for rational rate ratios.
const MAX_PHASES: u64 = 2048;

/// Downmixes to mono (channel mean) and resamples with a Hann-windowed sinc.
///
/// Output length is `round(len * target / source)`. Kernel weights are
/// normalised per output sample, so a DC input stays exactly DC.
pub fn resample_mono(clip: &AudioClip, target_rate: u32) -> AudioClip {
    assert!(target_rate > 0, "target rate must be positive");
    let mono = clip.downmix();
    let source_rate = clip.sample_rate();
    if source_rate == target_rate {
        return AudioClip::from_mono(mono, target_rate);
    }
    AudioClip::from_mono(resample(&mono, source_rate, target_rate), target_rate)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn resample(input: &[f64], source_rate: u32, target_rate: u32) -> Vec<f64> {
    let out_len = (input.len() as f64 * target_rate as f64 / source_rate as f64).round() as usize;
    if input.is_empty() || out_len == 0 {
        return Vec::new();
    }
    let step = source_rate as f64 / target_rate as f64;
    let cutoff = ROLLOFF * (target_rate as f64 / source_rate as f64).min(1.0);
    let radius = (KERNEL_ZEROS / cutoff).ceil() as isize;

    let g = gcd(source_rate as u64, target_rate as u64);
    let (num, den) = (source_rate as u64 / g, target_rate as u64 / g);
    // Output n sits at input position n * num / den; its fractional part
    // cycles through `den` values, so the kernel can be tabulated.
    let table: Option<Vec<Vec<f64>>> =
        (den <= MAX_PHASES).then(|| (0..den).map(|phase| kernel(phase as f64 / den as f64, radius, cutoff)).collect());

    (0..out_len)
        .map(|n| {
            let pos = n as f64 * step;
            let (base, weights) = match &table {
                Some(t) => {
                    let whole = (n as u64 * num) / den;
                    let phase = (n as u64 * num) % den;
                    (whole as isize, std::borrow::Cow::Borrowed(&t[phase as usize]))
                }
                None => {
                    let base = pos.floor();
                    (base as isize, std::borrow::Cow::Owned(kernel(pos - base, radius, cutoff)))
                }
            };
            let mut acc = 0.0;
            let mut norm = 0.0;
            for (j, w) in weights.iter().enumerate() {
                let idx = base - radius + 1 + j as isize;
                if idx >= 0 && (idx as usize) < input.len() {
                    acc += w * input[idx as usize];
                    norm += w;
                }
            }
            if norm.abs() > 1e-12 {
                acc / norm
            } else {
                0.0
            }
        })
        .collect()
}

/// Kernel taps for input offsets `-radius+1 ..= radius` around an output
/// position `frac` samples past an input sample.
fn kernel(frac: f64, radius: isize, cutoff: f64) -> Vec<f64> {
    (-radius + 1..=radius)
        .map(|k| {
            let x = k as f64 - frac;
            let window = if x.abs() >= radius as f64 { 0.0 } else { 0.5 + 0.5 * (PI * x / radius as f64).cos() };
            cutoff * sinc(cutoff * x) * window
        })
        .collect()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}
