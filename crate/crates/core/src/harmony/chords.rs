use serde::{Deserialize, Serialize};

use super::{ChordLabel, Chromagram};

const STATES: usize = 25;
const NO_CHORD: usize = 24;

/// Tunables for [`recognize_chords`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChordParams {
    /// Viterbi self-transition probability; the remainder is spread uniformly.
    pub self_transition: f64,
    /// Multiplier on the flat no-chord template's cosine similarity.
    pub no_chord_weight: f64,
    /// Segments shorter than this are merged into their longer neighbour.
    pub min_duration_s: f64,
}

impl Default for ChordParams {
    fn default() -> Self {
        Self { self_transition: 0.9, no_chord_weight: 0.4, min_duration_s: 0.25 }
    }
}

/// A labelled time span. Field order matches the raw report shape
/// (`end`, `label`, `start`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChordSegment {
    pub end: f64,
    pub label: ChordLabel,
    pub start: f64,
}

impl ChordSegment {
    pub fn new(start: f64, end: f64, label: ChordLabel) -> Self {
        Self { end, label, start }
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

fn templates() -> Vec<[f64; 12]> {
    (0..24)
        .map(|i| {
            let mut t = [0.0; 12];
            for pc in ChordLabel::from_index(i).pitch_classes() {
                t[pc.index()] = 1.0 / 3f64.sqrt();
            }
            t
        })
        .collect()
}

/// Similarity of one chroma frame to each of the 25 states.
fn frame_scores(frame: &[f64], templates: &[[f64; 12]], no_chord_weight: f64) -> [f64; STATES] {
    let mut out = [0.0; STATES];
    let norm = frame.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= 0.0 {
        out[NO_CHORD] = 1.0;
        return out;
    }
    for (s, t) in out.iter_mut().zip(templates) {
        *s = frame.iter().zip(t).map(|(a, b)| a * b).sum::<f64>() / norm;
    }
    let flat = frame.iter().sum::<f64>() / (norm * 12f64.sqrt());
    out[NO_CHORD] = no_chord_weight * flat;
    out
}

/// Template matching plus Viterbi smoothing over the 25-label vocabulary.
///
/// The returned segments tile `[0, duration_s]` exactly, adjacent labels
/// differ, and no segment is shorter than `min_duration_s` unless it is the
/// only one.
pub fn recognize_chords(chroma: &Chromagram, duration_s: f64, params: &ChordParams) -> Vec<ChordSegment> {
    assert!(duration_s > 0.0, "duration must be positive");
    let n = chroma.frame_count();
    if n == 0 {
        return vec![ChordSegment::new(0.0, duration_s, ChordLabel::NoChord)];
    }
    let templates = templates();
    let scores: Vec<[f64; STATES]> = chroma
        .energies
        .rows()
        .into_iter()
        .map(|r| frame_scores(r.as_slice().expect("standard layout"), &templates, params.no_chord_weight))
        .collect();
    let path = viterbi(&scores, params.self_transition);

    // Runs of equal state, with boundaries refined between frame centres.
    let mut segments = Vec::new();
    let mut start = 0.0;
    for i in 1..n {
        if path[i] != path[i - 1] {
            let t = refine_boundary(chroma, &scores, i, path[i - 1], path[i]);
            let t = t.clamp(start, duration_s);
            segments.push(ChordSegment::new(start, t, ChordLabel::from_index(path[i - 1])));
            start = t;
        }
    }
    segments.push(ChordSegment::new(start, duration_s, ChordLabel::from_index(path[n - 1])));
    segments.retain(|s| s.end > s.start);
    merge_short(segments, params.min_duration_s)
}

fn viterbi(scores: &[[f64; STATES]], self_transition: f64) -> Vec<usize> {
    let stay = self_transition.ln();
    let switch = ((1.0 - self_transition) / (STATES - 1) as f64).ln();
    let emit = |s: f64| s.max(1e-6).ln();
    let n = scores.len();
    let mut delta: [f64; STATES] = std::array::from_fn(|j| emit(scores[0][j]));
    let mut back = vec![[0usize; STATES]; n];
    for t in 1..n {
        let (best_prev, best_val) =
            delta.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let mut next = [0.0; STATES];
        for j in 0..STATES {
            let via_stay = delta[j] + stay;
            let via_switch = best_val + switch;
            if via_stay >= via_switch || best_prev == j {
                next[j] = via_stay;
                back[t][j] = j;
            } else {
                next[j] = via_switch;
                back[t][j] = best_prev;
            }
            next[j] += emit(scores[t][j]);
        }
        delta = next;
    }
    let mut state =
        delta.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc }).0;
    let mut path = vec![0; n];
    for t in (0..n).rev() {
        path[t] = state;
        state = back[t][state];
    }
    path
}

/// Sub-frame boundary between states `a` (before frame `i`) and `b`: the
/// zero crossing of `score_b - score_a`, interpolated between frame centres.
fn refine_boundary(chroma: &Chromagram, scores: &[[f64; STATES]], i: usize, a: usize, b: usize) -> f64 {
    let midpoint = 0.5 * (chroma.frame_time(i - 1) + chroma.frame_time(i));
    let diff = |k: usize| scores[k][b] - scores[k][a];
    let lo = i.saturating_sub(3).max(1);
    let hi = (i + 3).min(scores.len() - 1);
    let mut best: Option<(usize, f64)> = None;
    for k in lo..=hi {
        let (d0, d1) = (diff(k - 1), diff(k));
        if d0 <= 0.0 && d1 > 0.0 {
            let dist = (k as f64 - i as f64).abs();
            if best.is_none_or(|(bk, _)| dist < (bk as f64 - i as f64).abs()) {
                let frac = -d0 / (d1 - d0);
                best = Some((k, chroma.frame_time(k - 1) + frac * chroma.frame_hop_s));
            }
        }
    }
    best.map_or(midpoint, |(_, t)| t)
}

fn merge_short(mut segs: Vec<ChordSegment>, min_duration: f64) -> Vec<ChordSegment> {
    loop {
        segs = merge_equal_neighbours(segs);
        if segs.len() <= 1 {
            return segs;
        }
        let (idx, shortest) = segs
            .iter()
            .enumerate()
            .map(|(i, s)| (i, s.duration()))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        if shortest >= min_duration {
            return segs;
        }
        let left = idx.checked_sub(1).map(|j| segs[j].duration());
        let right = segs.get(idx + 1).map(|s| s.duration());
        let into_left = match (left, right) {
            (Some(l), Some(r)) => l >= r,
            (Some(_), None) => true,
            _ => false,
        };
        let removed = segs.remove(idx);
        if into_left {
            segs[idx - 1].end = removed.end;
        } else {
            segs[idx].start = removed.start;
        }
    }
}

fn merge_equal_neighbours(segs: Vec<ChordSegment>) -> Vec<ChordSegment> {
    let mut out: Vec<ChordSegment> = Vec::with_capacity(segs.len());
    for s in segs {
        match out.last_mut() {
            Some(last) if last.label == s.label => last.end = s.end,
            _ => out.push(s),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{stft, AudioClip};
    use crate::harmony::{chromagram, PitchClass};
    use crate::synth;
    use ndarray::Array2;

    const SR: u32 = 22_050;

    fn chords_of(samples: Vec<f64>) -> Vec<ChordSegment> {
        let clip = AudioClip::from_mono(samples, SR);
        let chroma = chromagram(&stft(&clip, 2048, 512));
        recognize_chords(&chroma, clip.duration_s(), &ChordParams::default())
    }

    fn assert_tiles(segs: &[ChordSegment], duration: f64) {
        assert_eq!(segs[0].start, 0.0);
        assert_eq!(segs.last().unwrap().end, duration);
        for w in segs.windows(2) {
            assert_eq!(w[0].end, w[1].start);
            assert_ne!(w[0].label, w[1].label);
        }
        for s in segs {
            assert!(s.start < s.end);
        }
    }

    #[test]
    fn sustained_c_major() {
        let c = ChordLabel::major(PitchClass::C);
        let segs = chords_of(synth::chord_sequence(&[(c, 5.0)], 0.2, SR));
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0], ChordSegment::new(0.0, 5.0, c));
    }

    #[test]
    fn silence_is_no_chord() {
        let segs = chords_of(synth::silence(3.0, SR));
        assert_eq!(segs, vec![ChordSegment::new(0.0, 3.0, ChordLabel::NoChord)]);
    }

    #[test]
    fn g_minor_segment_in_report_shape() {
        let seq = [
            (ChordLabel::major(PitchClass::D), 0.79),
            (ChordLabel::minor(PitchClass::G), 4.37 - 0.79),
            (ChordLabel::major(PitchClass::C), 6.0 - 4.37),
        ];
        let segs = chords_of(synth::chord_sequence(&seq, 0.2, SR));
        assert_tiles(&segs, segs.last().unwrap().end);
        let gm = segs.iter().find(|s| s.label == ChordLabel::minor(PitchClass::G)).expect("G:min segment");
        assert!((gm.start - 0.79).abs() < 0.03, "start {}", gm.start);
        assert!((gm.end - 4.37).abs() < 0.03, "end {}", gm.end);
        let json = serde_json::to_string(gm).unwrap();
        assert!(json.starts_with("{\"end\":") && json.contains("\"label\":\"G:min\""));
    }

    #[test]
    fn short_blips_are_merged() {
        let segs = merge_short(
            vec![
                ChordSegment::new(0.0, 2.0, ChordLabel::major(PitchClass::C)),
                ChordSegment::new(2.0, 2.1, ChordLabel::minor(PitchClass::A)),
                ChordSegment::new(2.1, 3.0, ChordLabel::major(PitchClass::C)),
            ],
            0.25,
        );
        assert_eq!(segs, vec![ChordSegment::new(0.0, 3.0, ChordLabel::major(PitchClass::C))]);
    }

    #[test]
    fn frames_matching_one_template_give_one_segment() {
        let mut e = Array2::zeros((100, 12));
        for mut row in e.rows_mut() {
            row[2] = 0.7;
            row[6] = 0.5;
            row[9] = 0.5;
            row[0] = 0.1;
        }
        let chroma = Chromagram { energies: e, frame_hop_s: 0.02, offset_s: 0.04 };
        let segs = recognize_chords(&chroma, 2.1, &ChordParams::default());
        assert_eq!(segs, vec![ChordSegment::new(0.0, 2.1, ChordLabel::major(PitchClass::D))]);
    }
}
