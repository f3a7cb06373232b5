use serde::{Deserialize, Serialize};

use crate::harmony::{ChordLabel, ChordSegment, Quality};

/// Maximum number of progressions reported.
pub const TOP_PROGRESSIONS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progression {
    pub chords: Vec<ChordLabel>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChordStats {
    pub total_changes: usize,
    pub dominant_chord: ChordLabel,
    pub major_count: usize,
    pub minor_count: usize,
    /// Mean duration of non-N segments (0 when there are none).
    pub avg_duration_s: f64,
    pub top_progressions: Vec<Progression>,
}

/// Counts and progressions over a chord tiling.
///
/// * `total_changes`: adjacent segment pairs with different labels.
/// * `dominant_chord`: greatest total duration, `N` only if nothing else
///   occurs; earlier first occurrence wins ties.
/// * progressions: bigrams and trigrams over the non-N labels with repeats
///   collapsed (so `C N C` reads as one `C`), ranked by count, then first
///   position, then length.
pub fn chord_statistics(chords: &[ChordSegment]) -> ChordStats {
    let total_changes = chords.windows(2).filter(|w| w[0].label != w[1].label).count();

    // (label, total duration, first index), in order of first occurrence.
    let mut totals: Vec<(ChordLabel, f64, usize)> = Vec::new();
    for (i, seg) in chords.iter().enumerate() {
        match totals.iter_mut().find(|t| t.0 == seg.label) {
            Some(t) => t.1 += seg.duration(),
            None => totals.push((seg.label, seg.duration(), i)),
        }
    }
    let pick = |only_chords: bool| {
        totals
            .iter()
            .filter(|t| !only_chords || t.0.is_chord())
            .fold(None::<&(ChordLabel, f64, usize)>, |best, t| match best {
                Some(b) if b.1 >= t.1 => Some(b),
                _ => Some(t),
            })
            .map(|t| t.0)
    };
    let dominant_chord = pick(true).or_else(|| pick(false)).unwrap_or(ChordLabel::NoChord);

    let voiced: Vec<&ChordSegment> = chords.iter().filter(|c| c.label.is_chord()).collect();
    let major_count = voiced.iter().filter(|c| c.label.quality() == Some(Quality::Major)).count();
    let minor_count = voiced.len() - major_count;
    let avg_duration_s =
        if voiced.is_empty() { 0.0 } else { voiced.iter().map(|c| c.duration()).sum::<f64>() / voiced.len() as f64 };

    let mut sequence: Vec<ChordLabel> = Vec::new();
    for c in &voiced {
        if sequence.last() != Some(&c.label) {
            sequence.push(c.label);
        }
    }
    // (chords, count, first index)
    let mut grams: Vec<(Vec<ChordLabel>, usize, usize)> = Vec::new();
    for len in [2, 3] {
        for (i, w) in sequence.windows(len).enumerate() {
            match grams.iter_mut().find(|g| g.0 == w) {
                Some(g) => g.1 += 1,
                None => grams.push((w.to_vec(), 1, i)),
            }
        }
    }
    grams.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)).then(a.0.len().cmp(&b.0.len())));
    let top_progressions =
        grams.into_iter().take(TOP_PROGRESSIONS).map(|(chords, count, _)| Progression { chords, count }).collect();

    ChordStats { total_changes, dominant_chord, major_count, minor_count, avg_duration_s, top_progressions }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmony::PitchClass;

    #[test]
    fn three_segment_example() {
        let c = ChordLabel::major(PitchClass::C);
        let gm = ChordLabel::minor(PitchClass::G);
        let s = chord_statistics(&[
            ChordSegment::new(0.0, 2.0, c),
            ChordSegment::new(2.0, 4.0, gm),
            ChordSegment::new(4.0, 6.0, c),
        ]);
        assert_eq!(s.total_changes, 2);
        assert_eq!(s.dominant_chord, c);
        assert_eq!((s.major_count, s.minor_count), (2, 1));
        assert_eq!(s.avg_duration_s, 2.0);
        assert_eq!(s.top_progressions[0], Progression { chords: vec![c, gm], count: 1 });
    }

    #[test]
    fn no_chord_only() {
        let s = chord_statistics(&[ChordSegment::new(0.0, 10.0, ChordLabel::NoChord)]);
        assert_eq!(s.total_changes, 0);
        assert_eq!(s.dominant_chord, ChordLabel::NoChord);
        assert_eq!((s.major_count, s.minor_count), (0, 0));
        assert_eq!(s.avg_duration_s, 0.0);
        assert!(s.top_progressions.is_empty());
    }

    #[test]
    fn long_no_chord_does_not_dominate() {
        let c = ChordLabel::major(PitchClass::C);
        let s = chord_statistics(&[ChordSegment::new(0.0, 8.0, ChordLabel::NoChord), ChordSegment::new(8.0, 9.0, c)]);
        assert_eq!(s.dominant_chord, c);
    }
}
