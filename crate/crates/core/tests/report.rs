mod common;

use std::collections::BTreeSet;

use serde_json::Value;
use trackmate_core::harmony::{ChordLabel, PitchClass};
use trackmate_core::report::{analyze_track, build_report, render_report, MusicReport, Outcome};
use trackmate_core::rhythm::TempoError;
use trackmate_core::AnalysisConfig;

use common::{fixture_clips, g_minor_bundle};

const HEADERS: [&str; 5] = ["RHYTHM", "HARMONY", "TIMBRE", "STRUCTURE", "SEMANTICS"];

/// Every key path in a JSON document; array elements share a `[]` segment.
fn paths(v: &Value, prefix: &str, out: &mut BTreeSet<String>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let p = format!("{prefix}.{k}");
                out.insert(p.clone());
                paths(child, &p, out);
            }
        }
        Value::Array(items) => {
            for item in items {
                paths(item, &format!("{prefix}[]"), out);
            }
        }
        _ => {}
    }
}

fn field_set(r: &MusicReport) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    paths(&serde_json::to_value(r).unwrap(), "", &mut out);
    out
}

#[test]
fn depth_one_chord_entry_has_raw_shape() {
    let r = build_report(&g_minor_bundle(), 1);
    let entry = serde_json::to_string(&r.harmony.chords[1]).unwrap();
    assert_eq!(entry, r#"{"end":4.37,"label":"G:min","start":0.79}"#);
}

#[test]
fn analysed_harmony_clip_has_the_g_minor_segment() {
    let (_, clip) = fixture_clips().into_iter().find(|(n, _)| *n == "harmony").unwrap();
    let bundle = analyze_track(&clip, &AnalysisConfig::default()).unwrap();
    let r = build_report(&bundle, 1);
    let gm = r.harmony.chords.iter().find(|c| c.label == ChordLabel::minor(PitchClass::G)).expect("G:min present");
    assert!((gm.start - 0.79).abs() <= 0.03, "{gm:?}");
    assert!((gm.end - 4.37).abs() <= 0.03, "{gm:?}");
}

#[test]
fn depth_ladder_adds_the_documented_metrics() {
    let b = g_minor_bundle();
    let d1 = build_report(&b, 1);
    assert!(d1.harmony.chord_changes.is_none() && d1.structure.emotions.is_none());
    let d2 = build_report(&b, 2);
    assert_eq!(d2.harmony.chord_changes, Some(5));
    assert_eq!(d2.harmony.dominant_chord, Some(ChordLabel::minor(PitchClass::G)));
    assert_eq!((d2.harmony.major_chord_count, d2.harmony.minor_chord_count), (Some(2), Some(3)));
    assert!(d2.harmony.top_progressions.is_none());
    let d3 = build_report(&b, 3);
    // (3.58 + 1.63 + 2 + 2 + 2) / 5
    assert_eq!(d3.harmony.avg_chord_duration_s, Some(2.24));
    let top = d3.harmony.top_progressions.as_ref().unwrap();
    assert_eq!(top[0].progression, "G:min -> D:maj");
    assert_eq!(d3.structure.emotion_transitions.as_ref().unwrap().len(), 2);
}

#[test]
fn depth_is_clamped() {
    let b = g_minor_bundle();
    assert_eq!(build_report(&b, 0), build_report(&b, 1));
    assert_eq!(build_report(&b, 9), build_report(&b, 3));
}

#[test]
fn field_sets_grow_with_depth() {
    let mut bundles = vec![g_minor_bundle()];
    for (_, clip) in fixture_clips() {
        bundles.push(analyze_track(&clip, &AnalysisConfig::default()).unwrap());
    }
    for b in &bundles {
        let sets: Vec<_> = (1..=3).map(|d| field_set(&build_report(b, d))).collect();
        assert!(sets[0].is_subset(&sets[1]), "{:?}", sets[0].difference(&sets[1]).collect::<Vec<_>>());
        assert!(sets[1].is_subset(&sets[2]), "{:?}", sets[1].difference(&sets[2]).collect::<Vec<_>>());
    }
}

#[test]
fn analysis_is_byte_deterministic() {
    let config = AnalysisConfig::default();
    for (name, clip) in fixture_clips() {
        let a = build_report(&analyze_track(&clip, &config).unwrap(), 3);
        let b = build_report(&analyze_track(&clip, &config).unwrap(), 3);
        assert_eq!(a.to_json(), b.to_json(), "{name}");
        assert_eq!(render_report(&a), render_report(&b), "{name}");
    }
}

#[test]
fn report_json_round_trips() {
    for d in 1..=3 {
        let r = build_report(&g_minor_bundle(), d);
        let back: MusicReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}

#[test]
fn every_header_appears_once() {
    for d in 1..=3 {
        let text = render_report(&build_report(&g_minor_bundle(), d));
        for h in HEADERS {
            let n = text.lines().filter(|l| l.split_whitespace().next() == Some(h)).count();
            assert_eq!(n, 1, "{h} at depth {d}:\n{text}");
        }
    }
}

#[test]
fn missing_tempo_is_rendered_explicitly() {
    let mut b = g_minor_bundle();
    b.tempo = Outcome::Absent(format!(
        "no rhythmic content detected ({})",
        TempoError::NoRhythmicContent { confidence: 0.01 }
    ));
    let text = render_report(&build_report(&b, 1));
    assert!(text.contains("tempo: no rhythmic content detected"), "{text}");
    let r = build_report(&b, 1);
    assert_eq!(r.rhythm.tempo_bpm, None);
}

#[test]
fn silence_renders_no_rhythm_line() {
    let (_, clip) = fixture_clips().into_iter().find(|(n, _)| *n == "silence").unwrap();
    let r = build_report(&analyze_track(&clip, &AnalysisConfig::default()).unwrap(), 2);
    assert!(render_report(&r).contains("no rhythmic content detected"));
}

#[test]
fn rendering_is_injective_over_the_corpus() {
    let mut reports = Vec::new();
    let base = g_minor_bundle();
    for d in 1..=3 {
        reports.push(build_report(&base, d));
    }
    let mut variants = Vec::new();
    let mut b = base.clone();
    b.chords[2].label = ChordLabel::minor(PitchClass::D);
    variants.push(b);
    let mut b = base.clone();
    b.timbre.warmth += 1.0;
    variants.push(b);
    let mut b = base.clone();
    b.sections[1].cluster = 'C';
    variants.push(b);
    let mut b = base.clone();
    b.tempo = Outcome::Absent("no rhythmic content detected".into());
    variants.push(b);
    for v in &variants {
        for d in 1..=3 {
            reports.push(build_report(v, d));
        }
    }
    for (_, clip) in fixture_clips() {
        let bundle = analyze_track(&clip, &AnalysisConfig::default()).unwrap();
        for d in 1..=3 {
            reports.push(build_report(&bundle, d));
        }
    }
    let mut with_hash = build_report(&base, 1);
    with_hash.track_meta.source_hash = Some("ab".repeat(32));
    reports.push(with_hash);

    for i in 0..reports.len() {
        for j in i + 1..reports.len() {
            if reports[i] != reports[j] {
                assert_ne!(render_report(&reports[i]), render_report(&reports[j]), "reports {i} and {j}");
            }
        }
    }
}
