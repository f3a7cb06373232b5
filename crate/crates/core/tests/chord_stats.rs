//! `chord_statistics` against a brute-force recount written independently.

use proptest::prelude::*;
use trackmate_core::harmony::{ChordLabel, ChordSegment};
use trackmate_core::report::{chord_statistics, ChordStats};

const TOP: usize = 5;

#[derive(Debug, PartialEq)]
struct Recount {
    changes: usize,
    dominant: String,
    major: usize,
    minor: usize,
    avg: f64,
    top: Vec<(Vec<String>, usize)>,
}

fn recount(labels: &[String], durations: &[f64]) -> Recount {
    let n = labels.len();
    let mut changes = 0;
    for i in 1..n {
        if labels[i] != labels[i - 1] {
            changes += 1;
        }
    }

    // Dominant: scan every distinct label in first-appearance order.
    let mut best: Option<(String, f64)> = None;
    let mut best_any: Option<(String, f64)> = None;
    let mut seen: Vec<&String> = Vec::new();
    for l in labels {
        if seen.contains(&l) {
            continue;
        }
        seen.push(l);
        let mut total = 0.0;
        for j in 0..n {
            if &labels[j] == l {
                total += durations[j];
            }
        }
        let slot = if l == "N" { &mut best_any } else { &mut best };
        if slot.as_ref().is_none_or(|b| total > b.1) {
            *slot = Some((l.clone(), total));
        }
    }
    let dominant = best.or(best_any).map_or("N".to_string(), |b| b.0);

    let major = labels.iter().filter(|l| l.ends_with(":maj")).count();
    let minor = labels.iter().filter(|l| l.ends_with(":min")).count();
    let chord_durs: Vec<f64> = (0..n).filter(|&i| labels[i] != "N").map(|i| durations[i]).collect();
    let avg = if chord_durs.is_empty() { 0.0 } else { chord_durs.iter().sum::<f64>() / chord_durs.len() as f64 };

    let mut seq: Vec<String> = Vec::new();
    for l in labels.iter().filter(|l| *l != "N") {
        if seq.last() != Some(l) {
            seq.push(l.clone());
        }
    }
    let mut candidates: Vec<(Vec<String>, usize, usize)> = Vec::new();
    for len in 2..=3 {
        if seq.len() < len {
            continue;
        }
        for start in 0..=seq.len() - len {
            let gram = seq[start..start + len].to_vec();
            if candidates.iter().any(|c| c.0 == gram) {
                continue;
            }
            let count = (0..=seq.len() - len).filter(|&s| seq[s..s + len] == gram[..]).count();
            candidates.push((gram, count, start));
        }
    }
    // Selection sort by (count desc, first index asc, length asc).
    let mut top = Vec::new();
    while top.len() < TOP && !candidates.is_empty() {
        let mut pick = 0;
        for i in 1..candidates.len() {
            let (a, b) = (&candidates[i], &candidates[pick]);
            let better = a.1 > b.1 || (a.1 == b.1 && (a.2 < b.2 || (a.2 == b.2 && a.0.len() < b.0.len())));
            if better {
                pick = i;
            }
        }
        let c = candidates.remove(pick);
        top.push((c.0, c.1));
    }

    Recount { changes, dominant, major, minor, avg, top }
}

fn as_recount(s: &ChordStats) -> Recount {
    Recount {
        changes: s.total_changes,
        dominant: s.dominant_chord.to_string(),
        major: s.major_count,
        minor: s.minor_count,
        avg: s.avg_duration_s,
        top: s.top_progressions.iter().map(|p| (p.chords.iter().map(|c| c.to_string()).collect(), p.count)).collect(),
    }
}

/// Segments tiling `[0, total)`, with labels drawn from a small alphabet so
/// progressions repeat. Durations are multiples of 0.25 s.
fn segments() -> impl Strategy<Value = Vec<ChordSegment>> {
    (1usize..=25)
        .prop_flat_map(|alphabet| {
            let labels = proptest::sample::subsequence((0..25).collect::<Vec<usize>>(), alphabet);
            (labels, 1usize..40)
        })
        .prop_flat_map(|(alphabet, n)| {
            let alphabet = alphabet.clone();
            proptest::collection::vec((proptest::sample::select(alphabet), 1u32..=16), n)
        })
        .prop_map(|items| {
            let mut t = 0.0;
            items
                .into_iter()
                .map(|(idx, q)| {
                    let start = t;
                    t += q as f64 * 0.25;
                    ChordSegment::new(start, t, ChordLabel::from_index(idx))
                })
                .collect()
        })
}

fn check(segs: &[ChordSegment]) -> Result<(), TestCaseError> {
    let labels: Vec<String> = segs.iter().map(|s| s.label.to_string()).collect();
    let durations: Vec<f64> = segs.iter().map(|s| s.end - s.start).collect();
    let oracle = recount(&labels, &durations);
    let got = as_recount(&chord_statistics(segs));
    prop_assert!((got.avg - oracle.avg).abs() < 1e-6, "avg {} vs {}", got.avg, oracle.avg);
    prop_assert_eq!(Recount { avg: 0.0, ..got }, Recount { avg: 0.0, ..oracle });
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_brute_force_recount(segs in segments()) {
        check(&segs)?;
    }

    #[test]
    fn counting_identities(segs in segments()) {
        let s = chord_statistics(&segs);
        let voiced = segs.iter().filter(|c| c.label.is_chord()).count();
        prop_assert_eq!(s.major_count + s.minor_count, voiced);
        prop_assert!(s.total_changes < segs.len());
        prop_assert!(s.top_progressions.len() <= TOP);
        prop_assert!(s.top_progressions.windows(2).all(|w| w[0].count >= w[1].count));
        prop_assert!(s.top_progressions.iter().all(|p| (2..=3).contains(&p.chords.len())));
        prop_assert!(s.dominant_chord.is_chord() || voiced == 0);
    }
}

#[test]
fn empty_input() {
    let s = chord_statistics(&[]);
    assert_eq!(s.total_changes, 0);
    assert_eq!(s.dominant_chord, ChordLabel::NoChord);
    assert!(s.top_progressions.is_empty());
}
