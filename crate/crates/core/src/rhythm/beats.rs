use serde::{Deserialize, Serialize};

use super::{OnsetEnvelope, TempoEstimate};
use crate::harmony::Chromagram;

/// Beats per bar assumed by downbeat estimation.
pub const METER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeatParams {
    /// Weight of the log-interval penalty in the dynamic programme.
    pub tightness: f64,
}

impl Default for BeatParams {
    fn default() -> Self {
        Self { tightness: 100.0 }
    }
}

/// Beat times with a downbeat flag per beat.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BeatGrid {
    pub beat_times_s: Vec<f64>,
    pub downbeat_flags: Vec<bool>,
    pub meter: usize,
}

impl BeatGrid {
    pub fn len(&self) -> usize {
        self.beat_times_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beat_times_s.is_empty()
    }

    pub fn downbeat_times(&self) -> Vec<f64> {
        self.beat_times_s.iter().zip(&self.downbeat_flags).filter_map(|(t, &d)| d.then_some(*t)).collect()
    }

    pub fn inter_beat_intervals(&self) -> Vec<f64> {
        self.beat_times_s.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Flags every `METER`-th beat starting at `phase`.
    pub fn with_phase(mut self, phase: usize) -> Self {
        self.downbeat_flags = (0..self.len()).map(|i| i >= phase && (i - phase) % METER == 0).collect();
        self
    }
}

/// Dynamic-programming beat tracker.
///
/// Maximises `sum(env(beat)) - tightness * sum(ln(interval / period)^2)` over
/// beat sequences, with the envelope scaled to unit standard deviation.
/// Weak leading and trailing beats (below half the RMS envelope value at
/// the beats) are trimmed. Downbeats come from [`estimate_downbeats`]
/// without chroma.
#[allow(clippy::needless_range_loop)]
pub fn track_beats(env: &OnsetEnvelope, tempo: &TempoEstimate, params: &BeatParams) -> BeatGrid {
    assert!(tempo.confidence > 0.0, "beat tracking needs a confident tempo");
    let n = env.len();
    let empty = BeatGrid { meter: METER, ..Default::default() };
    if n == 0 {
        return empty;
    }
    let mean = env.strengths.iter().sum::<f64>() / n as f64;
    let std = (env.strengths.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let local: Vec<f64> = if std > 1e-12 {
        env.strengths.iter().map(|v| v / std).collect()
    } else if mean > 0.0 {
        env.strengths.iter().map(|v| v / mean).collect()
    } else {
        vec![1.0; n]
    };

    let period = tempo.period_s() / env.frame_hop_s;
    let mut score = vec![0.0; n];
    let mut back: Vec<Option<usize>> = vec![None; n];
    for t in 0..n {
        let lo = t as f64 - 2.0 * period;
        let hi = t as f64 - period / 2.0;
        let mut best: Option<(f64, usize)> = None;
        if hi >= 0.0 {
            for p in (lo.ceil().max(0.0) as usize)..=(hi.floor() as usize) {
                let gap = (t - p) as f64 / period;
                let v = score[p] - params.tightness * gap.ln().powi(2);
                if best.is_none_or(|(b, _)| v > b) {
                    best = Some((v, p));
                }
            }
        }
        match best {
            Some((v, p)) if v > 0.0 => {
                score[t] = local[t] + v;
                back[t] = Some(p);
            }
            _ => score[t] = local[t],
        }
    }

    // Last beat: best score within the final period.
    let tail = (n as f64 - period).max(0.0) as usize;
    let mut t = (tail..n).fold(tail, |b, i| if score[i] > score[b] { i } else { b });
    let mut frames = vec![t];
    while let Some(p) = back[t] {
        frames.push(p);
        t = p;
    }
    frames.reverse();

    let rms = (frames.iter().map(|&f| local[f].powi(2)).sum::<f64>() / frames.len() as f64).sqrt();
    let threshold = 0.5 * rms;
    let strength = |f: usize| {
        let lo = f.saturating_sub(1);
        let hi = (f + 2).min(n);
        local[lo..hi].iter().cloned().fold(0.0, f64::max)
    };
    let first = frames.iter().position(|&f| strength(f) > threshold);
    let last = frames.iter().rposition(|&f| strength(f) > threshold);
    let frames = match (first, last) {
        (Some(a), Some(b)) => &frames[a..=b],
        _ => &frames[..],
    };

    let mut times: Vec<f64> = Vec::with_capacity(frames.len());
    for &f in frames {
        let t = env.time_of(f as f64).clamp(0.0, env.duration_s);
        if times.last().is_none_or(|&p| t > p) {
            times.push(t);
        }
    }
    let grid = BeatGrid { downbeat_flags: vec![false; times.len()], beat_times_s: times, meter: METER };
    if grid.is_empty() {
        grid
    } else {
        estimate_downbeats(grid, env, None)
    }
}

/// Picks the 4/4 bar phase `p` maximising the mean onset strength at the
/// candidate downbeats (normalised to the strongest beat) plus the mean
/// chroma change across them. Lowest phase wins ties.
pub fn estimate_downbeats(grid: BeatGrid, env: &OnsetEnvelope, chroma: Option<&Chromagram>) -> BeatGrid {
    assert!(!grid.is_empty(), "downbeat estimation needs beats");
    let n = grid.len();
    let strengths: Vec<f64> = grid.beat_times_s.iter().map(|&t| env.energy_near(env.index_of(t), 2)).collect();
    let max_strength = strengths.iter().cloned().fold(0.0, f64::max);
    let onset: Vec<f64> = strengths.iter().map(|s| if max_strength > 0.0 { s / max_strength } else { 0.0 }).collect();
    let change: Vec<f64> = match chroma {
        Some(c) => chroma_change(&grid.beat_times_s, c, env.duration_s),
        None => vec![0.0; n],
    };

    let mut best = (0, f64::NEG_INFINITY);
    for p in 0..METER.min(n) {
        let idx: Vec<usize> = (p..n).step_by(METER).collect();
        let m = |v: &[f64]| idx.iter().map(|&i| v[i]).sum::<f64>() / idx.len() as f64;
        let score = m(&onset) + m(&change);
        if score > best.1 + 1e-9 {
            best = (p, score);
        }
    }
    grid.with_phase(best.0)
}

/// Cosine distance between the mean chroma of the beat span before and
/// after each beat.
fn chroma_change(beats: &[f64], chroma: &Chromagram, duration: f64) -> Vec<f64> {
    let span_mean = |a: f64, b: f64| {
        let mut v = [0.0; 12];
        let mut count = 0;
        for i in 0..chroma.frame_count() {
            let t = chroma.frame_time(i);
            if t >= a && t < b {
                for (pc, slot) in v.iter_mut().enumerate() {
                    *slot += chroma.energies[[i, pc]];
                }
                count += 1;
            }
        }
        if count > 0 {
            v.iter_mut().for_each(|x| *x /= count as f64);
        }
        v
    };
    (0..beats.len())
        .map(|i| {
            let prev = if i > 0 { beats[i - 1] } else { 0.0 };
            let next = beats.get(i + 1).copied().unwrap_or(duration);
            let (a, b) = (span_mean(prev, beats[i]), span_mean(beats[i], next));
            let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            if na > 0.0 && nb > 0.0 {
                1.0 - a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / (na * nb)
            } else {
                0.0
            }
        })
        .collect()
}
