//! Section segmentation and per-section semantics.
//!
//! Boundaries come from a checkerboard-kernel novelty curve over a
//! beat-synchronous self-similarity matrix; sections are then grouped into
//! lettered clusters by average-linkage agglomeration.

mod emotion;
mod instruments;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::MfccMatrix;
use crate::harmony::Chromagram;
use crate::rhythm::BeatGrid;

pub use emotion::{classify_emotion, EmotionLabel, EmotionTag};
pub use instruments::{detect_instruments, InstrumentName, InstrumentTag, InstrumentThresholds};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StructureParams {
    /// Checkerboard kernel width in beats.
    pub kernel_beats: usize,
    /// Minimum section length in beats (also the distance kept from the edges).
    pub min_section_beats: usize,
    /// Novelty peaks below this are ignored. Chord changes inside a loop
    /// peak around 0.15-0.2; section changes score well above 0.3.
    pub novelty_threshold: f64,
    /// Clusters closer than this (1 - similarity) are merged.
    pub cluster_distance: f64,
    pub max_clusters: usize,
}

impl Default for StructureParams {
    fn default() -> Self {
        Self { kernel_beats: 16, min_section_beats: 4, novelty_threshold: 0.25, cluster_distance: 0.2, max_clusters: 5 }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructureError {
    #[error("too few beats for segmentation ({beats} < 8)")]
    TooShort { beats: usize },
}

/// Minimum number of beats [`segment_structure`] accepts.
pub const MIN_BEATS: usize = 8;

/// Boundaries and cluster letter of one section, before labelling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralSegment {
    pub start: f64,
    pub end: f64,
    pub cluster: char,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SectionFunction {
    Intro,
    Verse,
    Chorus,
    Bridge,
    Outro,
    Other,
}

impl SectionFunction {
    pub fn as_str(self) -> &'static str {
        match self {
            SectionFunction::Intro => "intro",
            SectionFunction::Verse => "verse",
            SectionFunction::Chorus => "chorus",
            SectionFunction::Bridge => "bridge",
            SectionFunction::Outro => "outro",
            SectionFunction::Other => "other",
        }
    }
}

/// A fully described section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub start: f64,
    pub end: f64,
    pub cluster: char,
    pub function: SectionFunction,
    pub emotion: EmotionTag,
    pub instruments: Vec<InstrumentTag>,
    /// Mean RMS of the section's samples.
    pub energy: f64,
}

/// One segment spanning the whole track, cluster `A`.
pub fn single_segment(duration_s: f64) -> Vec<StructuralSegment> {
    vec![StructuralSegment { start: 0.0, end: duration_s, cluster: 'A' }]
}

/// Per-beat feature vectors: chroma and MFCC (without the energy
/// coefficient), each the median over the frames inside the beat span.
struct BeatFeatures {
    chroma: Vec<Vec<f64>>,
    timbre: Vec<Vec<f64>>,
}

fn median_of(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn beat_features(chroma: &Chromagram, mfcc: &MfccMatrix, beats: &[f64], duration: f64) -> BeatFeatures {
    let frames = chroma.frame_count().min(mfcc.coefficients.nrows());
    let n_mfcc = mfcc.coefficients.ncols();
    let mut out = BeatFeatures { chroma: Vec::with_capacity(beats.len()), timbre: Vec::with_capacity(beats.len()) };
    for (i, &start) in beats.iter().enumerate() {
        let end = beats.get(i + 1).copied().unwrap_or(duration);
        let mut idx: Vec<usize> = (0..frames)
            .filter(|&f| {
                let t = chroma.frame_time(f);
                t >= start && t < end
            })
            .collect();
        if idx.is_empty() {
            // Span shorter than a hop: take the nearest frame.
            let f = ((0.5 * (start + end) - chroma.offset_s) / chroma.frame_hop_s).round();
            idx.push((f.max(0.0) as usize).min(frames.saturating_sub(1)));
        }
        let column = |get: &dyn Fn(usize) -> f64| {
            let mut v: Vec<f64> = idx.iter().map(|&f| get(f)).collect();
            median_of(&mut v)
        };
        out.chroma.push((0..12).map(|pc| column(&|f| chroma.energies[[f, pc]])).collect());
        out.timbre.push((1..n_mfcc).map(|c| column(&|f| mfcc.coefficients[[f, c]])).collect());
    }
    out
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na > 0.0 && nb > 0.0 {
        dot / (na * nb)
    } else if na == 0.0 && nb == 0.0 {
        1.0
    } else {
        0.0
    }
}

fn similarity(ca: &[f64], ta: &[f64], cb: &[f64], tb: &[f64]) -> f64 {
    0.5 * cosine(ca, cb) + 0.5 * cosine(ta, tb)
}

/// Novelty at each beat index `i` (boundary between beats `i-1` and `i`).
///
/// Half the difference between the Gaussian-weighted mean similarity within
/// the two quadrants on either side of `i` and the mean across them. Only
/// cells inside the matrix contribute.
pub fn novelty_curve(sim: &[Vec<f64>], kernel_beats: usize) -> Vec<f64> {
    let n = sim.len();
    let half = (kernel_beats / 2).max(1) as isize;
    let sigma = half as f64 / 2.0;
    let weight = |d: isize| (-0.5 * ((d as f64 + 0.5) / sigma).powi(2)).exp();
    (0..n)
        .map(|i| {
            let i = i as isize;
            let (mut within, mut within_w, mut cross, mut cross_w) = (0.0, 0.0, 0.0, 0.0);
            for a in (i - half)..(i + half) {
                for b in (i - half)..(i + half) {
                    if a < 0 || b < 0 || a >= n as isize || b >= n as isize {
                        continue;
                    }
                    let da = if a < i { i - 1 - a } else { a - i };
                    let db = if b < i { i - 1 - b } else { b - i };
                    let w = weight(da) * weight(db);
                    let v = sim[a as usize][b as usize];
                    if (a < i) == (b < i) {
                        within += w * v;
                        within_w += w;
                    } else {
                        cross += w * v;
                        cross_w += w;
                    }
                }
            }
            if within_w > 0.0 && cross_w > 0.0 {
                0.5 * (within / within_w - cross / cross_w)
            } else {
                0.0
            }
        })
        .collect()
}

/// Splits the track at novelty peaks and assigns cluster letters in order of
/// first appearance. Adjacent sections that land in the same cluster are
/// merged, so every boundary separates different letters.
pub fn segment_structure(
    chroma: &Chromagram,
    mfcc: &MfccMatrix,
    beats: &BeatGrid,
    duration_s: f64,
    params: &StructureParams,
) -> Result<Vec<StructuralSegment>, StructureError> {
    let n = beats.len();
    if n < MIN_BEATS {
        return Err(StructureError::TooShort { beats: n });
    }
    let feats = beat_features(chroma, mfcc, &beats.beat_times_s, duration_s);
    let sim: Vec<Vec<f64>> = (0..n)
        .map(|a| {
            (0..n).map(|b| similarity(&feats.chroma[a], &feats.timbre[a], &feats.chroma[b], &feats.timbre[b])).collect()
        })
        .collect();
    let novelty = novelty_curve(&sim, params.kernel_beats);

    let min_gap = params.min_section_beats;
    let mut candidates: Vec<usize> = (min_gap..n.saturating_sub(min_gap - 1))
        .filter(|&i| {
            let v = novelty[i];
            v >= params.novelty_threshold && (i == 0 || v > novelty[i - 1]) && (i + 1 >= n || v >= novelty[i + 1])
        })
        .collect();
    candidates.sort_by(|&a, &b| novelty[b].total_cmp(&novelty[a]).then(a.cmp(&b)));
    let mut cuts: Vec<usize> = Vec::new();
    for c in candidates {
        if n - c >= min_gap && cuts.iter().all(|&k| k.abs_diff(c) >= min_gap) {
            cuts.push(c);
        }
    }
    cuts.sort_unstable();

    // Beat-index spans of the sections.
    let mut spans = Vec::with_capacity(cuts.len() + 1);
    let mut lo = 0;
    for &c in &cuts {
        spans.push((lo, c));
        lo = c;
    }
    spans.push((lo, n));

    let letters = cluster_sections(&feats, &spans, params);
    let mut out: Vec<StructuralSegment> = Vec::with_capacity(spans.len());
    for (k, &(a, _)) in spans.iter().enumerate() {
        let start = if k == 0 { 0.0 } else { beats.beat_times_s[a] };
        match out.last_mut() {
            Some(prev) if prev.cluster == letters[k] => {}
            Some(prev) => {
                prev.end = start;
                out.push(StructuralSegment { start, end: duration_s, cluster: letters[k] });
            }
            None => out.push(StructuralSegment { start, end: duration_s, cluster: letters[k] }),
        }
    }
    // Merging may leave letters out of first-appearance order.
    relabel(&mut out);
    Ok(out)
}

fn relabel(segs: &mut [StructuralSegment]) {
    let mut seen: Vec<char> = Vec::new();
    for s in segs.iter_mut() {
        let pos = match seen.iter().position(|&c| c == s.cluster) {
            Some(p) => p,
            None => {
                seen.push(s.cluster);
                seen.len() - 1
            }
        };
        s.cluster = (b'A' + pos as u8) as char;
    }
}

fn mean_vector(rows: &[Vec<f64>], lo: usize, hi: usize) -> Vec<f64> {
    let dim = rows[lo].len();
    let mut out = vec![0.0; dim];
    for r in &rows[lo..hi] {
        for (o, v) in out.iter_mut().zip(r) {
            *o += v;
        }
    }
    out.iter_mut().for_each(|o| *o /= (hi - lo) as f64);
    out
}

/// Average-linkage clustering of section means; returns one letter per span.
fn cluster_sections(feats: &BeatFeatures, spans: &[(usize, usize)], params: &StructureParams) -> Vec<char> {
    let means: Vec<(Vec<f64>, Vec<f64>)> =
        spans.iter().map(|&(a, b)| (mean_vector(&feats.chroma, a, b), mean_vector(&feats.timbre, a, b))).collect();
    let m = spans.len();
    let dist: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| 1.0 - similarity(&means[i].0, &means[i].1, &means[j].0, &means[j].1)).collect())
        .collect();
    let mut clusters: Vec<Vec<usize>> = (0..m).map(|i| vec![i]).collect();
    loop {
        if clusters.len() <= 1 {
            break;
        }
        let mut best = (0, 1, f64::INFINITY);
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let mut total = 0.0;
                for &i in &clusters[a] {
                    for &j in &clusters[b] {
                        total += dist[i][j];
                    }
                }
                let d = total / (clusters[a].len() * clusters[b].len()) as f64;
                if d < best.2 {
                    best = (a, b, d);
                }
            }
        }
        if best.2 >= params.cluster_distance && clusters.len() <= params.max_clusters {
            break;
        }
        let merged = clusters.remove(best.1);
        clusters[best.0].extend(merged);
    }
    let mut owner = vec![0; m];
    for (c, members) in clusters.iter().enumerate() {
        for &i in members {
            owner[i] = c;
        }
    }
    let mut order: Vec<usize> = Vec::new();
    owner
        .iter()
        .map(|&c| {
            let pos = order.iter().position(|&o| o == c).unwrap_or_else(|| {
                order.push(c);
                order.len() - 1
            });
            (b'A' + pos as u8) as char
        })
        .collect()
}

/// Assigns a function to each section from cluster repetition, energy and
/// position.
///
/// The repeated cluster with the highest mean energy is the chorus; the most
/// repeated of the other repeated clusters is the verse. A first or last
/// section quieter than half the duration-weighted track mean becomes intro
/// or outro, whatever its cluster. A mid-track cluster that occurs once is a
/// bridge. Everything else is other.
pub fn label_functions(segments: &[StructuralSegment], energies: &[f64]) -> Vec<SectionFunction> {
    assert_eq!(segments.len(), energies.len(), "one energy per section");
    let m = segments.len();
    if m == 0 {
        return Vec::new();
    }
    let mut letters: Vec<char> = segments.iter().map(|s| s.cluster).collect();
    letters.sort_unstable();
    letters.dedup();
    let stats: Vec<(char, usize, f64, usize)> = letters
        .iter()
        .map(|&c| {
            let idx: Vec<usize> = (0..m).filter(|&i| segments[i].cluster == c).collect();
            let energy = idx.iter().map(|&i| energies[i]).sum::<f64>() / idx.len() as f64;
            (c, idx.len(), energy, idx[0])
        })
        .collect();
    let repeated: Vec<&(char, usize, f64, usize)> = stats.iter().filter(|s| s.1 >= 2).collect();
    let chorus = repeated
        .iter()
        .copied()
        .fold(None::<&(char, usize, f64, usize)>, |b, s| match b {
            Some(b) if b.2 > s.2 || (b.2 == s.2 && b.3 < s.3) => Some(b),
            _ => Some(s),
        })
        .map(|s| s.0);
    let verse = repeated
        .iter()
        .copied()
        .filter(|s| Some(s.0) != chorus)
        .fold(None::<&(char, usize, f64, usize)>, |b, s| match b {
            Some(b) if b.1 > s.1 || (b.1 == s.1 && b.3 < s.3) => Some(b),
            _ => Some(s),
        })
        .map(|s| s.0);

    let total: f64 = segments.iter().map(|s| s.end - s.start).sum();
    let mean = if total > 0.0 {
        segments.iter().zip(energies).map(|(s, e)| (s.end - s.start) * e).sum::<f64>() / total
    } else {
        0.0
    };
    let count = |c: char| segments.iter().filter(|s| s.cluster == c).count();

    (0..m)
        .map(|i| {
            let c = segments[i].cluster;
            let quiet = m > 1 && energies[i] < 0.5 * mean;
            if i == 0 && quiet {
                SectionFunction::Intro
            } else if i == m - 1 && quiet {
                SectionFunction::Outro
            } else if Some(c) == chorus {
                SectionFunction::Chorus
            } else if Some(c) == verse {
                SectionFunction::Verse
            } else if count(c) == 1 && i > 0 && i < m - 1 {
                SectionFunction::Bridge
            } else {
                SectionFunction::Other
            }
        })
        .collect()
}
