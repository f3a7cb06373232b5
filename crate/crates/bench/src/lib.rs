//! Fixtures shared by the benchmarks.

use trackmate_core::harmony::{ChordLabel, PitchClass};
use trackmate_core::{synth, AudioClip};

pub const SR: u32 = 22_050;

/// An 8-bar pop loop at 100 BPM, about 19 s.
pub fn pop_clip() -> AudioClip {
    let prog = [
        ChordLabel::major(PitchClass::C),
        ChordLabel::minor(PitchClass::A),
        ChordLabel::major(PitchClass::F),
        ChordLabel::major(PitchClass::G),
    ];
    AudioClip::from_mono(synth::pop_loop(100.0, 8, &prog, SR), SR)
}
