use std::fmt::Write;

use super::build::MusicReport;

fn opt2(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.2}"))
}

/// Plain-text rendering for prompts and terminals.
///
/// One header per aspect, times at two decimals, timbre scores as integers.
/// Every field of the report appears, so different reports render differently.
pub fn render_report(report: &MusicReport) -> String {
    let mut out = String::new();
    let w = &mut out;
    let m = &report.track_meta;
    let _ = writeln!(w, "TRACK REPORT (schema {}, depth {})", report.schema_version, report.depth);
    let _ = writeln!(w, "duration: {:.2} s at {} Hz", m.duration_s, m.sample_rate);
    if let Some(h) = &m.source_hash {
        let _ = writeln!(w, "source sha256: {h}");
    }

    let r = &report.rhythm;
    let _ = writeln!(w, "\nRHYTHM");
    match r.tempo_bpm {
        Some(bpm) => {
            let _ = writeln!(w, "tempo: {bpm:.2} BPM (confidence {})", opt2(r.tempo_confidence));
        }
        None => {
            let _ = writeln!(w, "tempo: {}", r.note.as_deref().unwrap_or("no rhythmic content detected"));
        }
    }
    let _ = writeln!(w, "beats: {}, downbeats: {}, meter: {}/4", r.beat_count, r.downbeat_count, r.meter);
    if let Some(n) = r.onset_count {
        let _ = writeln!(w, "onsets: {n}");
    }
    if let Some(cv) = r.tempo_stability_cv {
        let _ = writeln!(w, "tempo stability (beat interval CV): {cv:.2}");
    }
    if let Some(d) = r.onset_density_per_s {
        let _ = writeln!(w, "onset density: {d:.2} per s");
    }

    let h = &report.harmony;
    let _ = writeln!(w, "\nHARMONY");
    match &h.key {
        Some(k) => {
            let _ = writeln!(w, "key: {k} (correlation {})", opt2(h.key_correlation));
        }
        None => {
            let _ = writeln!(w, "key: unknown ({})", h.note.as_deref().unwrap_or("not estimated"));
        }
    }
    let _ = writeln!(w, "chords:");
    for c in &h.chords {
        let _ = writeln!(w, "  {:.2}-{:.2} {}", c.start, c.end, c.label);
    }
    if let Some(n) = h.chord_changes {
        let _ = writeln!(w, "chord changes: {n}");
    }
    if let Some(d) = h.dominant_chord {
        let _ = writeln!(w, "dominant chord: {d}");
    }
    if let (Some(maj), Some(min)) = (h.major_chord_count, h.minor_chord_count) {
        let _ = writeln!(w, "major/minor segments: {maj}/{min}");
    }
    if let Some(a) = h.avg_chord_duration_s {
        let _ = writeln!(w, "average chord duration: {a:.2} s");
    }
    if let Some(ps) = &h.top_progressions {
        let _ = writeln!(w, "top progressions:");
        for p in ps {
            let _ = writeln!(w, "  {} (x{})", p.progression, p.count);
        }
    }

    let t = &report.timbre;
    let _ = writeln!(w, "\nTIMBRE (0-100)");
    for (name, v) in [
        ("brightness", t.brightness),
        ("warmth", t.warmth),
        ("depth", t.depth),
        ("hardness", t.hardness),
        ("roughness", t.roughness),
        ("sharpness", t.sharpness),
        ("boominess", t.boominess),
    ] {
        let _ = writeln!(w, "{name}: {v}");
    }

    let s = &report.structure;
    let _ = writeln!(w, "\nSTRUCTURE");
    if let Some(n) = &s.note {
        let _ = writeln!(w, "note: {n}");
    }
    for (i, sec) in s.sections.iter().enumerate() {
        let inst: Vec<&str> = sec.instruments.iter().map(|n| n.as_str()).collect();
        let inst = if inst.is_empty() { "none".to_string() } else { inst.join(", ") };
        let _ = writeln!(
            w,
            "  {}. {:.2}-{:.2} {} [{}] energy {:.2}, instruments: {}",
            i + 1,
            sec.start,
            sec.end,
            sec.function.as_str(),
            sec.cluster,
            sec.energy,
            inst
        );
    }
    if let Some(rows) = &s.emotions {
        let _ = writeln!(w, "emotions:");
        for e in rows {
            let _ = writeln!(
                w,
                "  section {}: {} (valence {:.2}, arousal {:.2})",
                e.section,
                e.emotion.as_str(),
                e.valence,
                e.arousal
            );
        }
    }
    if let Some(ts) = &s.emotion_transitions {
        let _ = writeln!(w, "emotion transitions:");
        for x in ts {
            let _ = writeln!(
                w,
                "  {} -> {}: valence {:+.2}, arousal {:+.2}",
                x.from_section, x.to_section, x.valence_delta, x.arousal_delta
            );
        }
    }

    let sm = &report.semantics;
    let _ = writeln!(w, "\nSEMANTICS");
    let _ = writeln!(w, "genre: {}", sm.genre);
    let _ = writeln!(w, "theme: {}", sm.theme);
    let _ = writeln!(w, "source: {}", sm.source.as_str());
    if let Some(warn) = &sm.warning {
        let _ = writeln!(w, "warning: {warn}");
    }
    out
}
