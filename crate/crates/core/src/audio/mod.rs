//! Audio decoding and the shared signal front-end.
//!
//! Everything downstream works on a mono [`AudioClip`] at
//! [`ANALYSIS_SAMPLE_RATE`]; [`decode_audio`] and [`resample_mono`] get
//! arbitrary WAV input there.

mod resample;
mod spectral;

use std::io::Cursor;

use thiserror::Error;

pub use resample::resample_mono;
pub use spectral::{mel_filterbank, mfcc, stft, MfccMatrix, Spectrogram};

/// Sample rate every analyzer runs at.
pub const ANALYSIS_SAMPLE_RATE: u32 = 22_050;
/// STFT window length in samples (about 93 ms at the analysis rate).
pub const WINDOW_SIZE: usize = 2048;
/// STFT hop in samples (about 23 ms at the analysis rate).
pub const HOP_SIZE: usize = 512;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("empty input")]
    Empty,
    #[error("unsupported audio format: {0}")]
    Unsupported(String),
    #[error("truncated audio data: {0}")]
    Truncated(String),
    #[error("audio contains no samples")]
    ZeroLength,
}

/// Decoded PCM audio, stored planar (one `Vec` per channel) with samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    channels: Vec<Vec<f64>>,
    sample_rate: u32,
}

impl AudioClip {
    /// Builds a mono clip. Samples are clamped into `[-1, 1]`.
    pub fn from_mono(samples: Vec<f64>, sample_rate: u32) -> Self {
        Self::from_channels(vec![samples], sample_rate)
    }

    /// Builds a clip from planar channel data.
    ///
    /// Panics if `channels` is empty, the channels differ in length, or the
    /// sample rate is zero.
    pub fn from_channels(mut channels: Vec<Vec<f64>>, sample_rate: u32) -> Self {
        assert!(!channels.is_empty(), "a clip needs at least one channel");
        assert!(sample_rate > 0, "sample rate must be positive");
        let len = channels[0].len();
        assert!(channels.iter().all(|c| c.len() == len), "all channels must have the same length");
        for ch in &mut channels {
            for s in ch.iter_mut() {
                *s = s.clamp(-1.0, 1.0);
            }
        }
        Self { channels, sample_rate }
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn channel(&self, index: usize) -> &[f64] {
        &self.channels[index]
    }

    pub fn frame_count(&self) -> usize {
        self.channels[0].len()
    }

    pub fn duration_s(&self) -> f64 {
        self.frame_count() as f64 / self.sample_rate as f64
    }

    pub fn is_mono(&self) -> bool {
        self.channels.len() == 1
    }

    /// Samples of a mono clip. Panics on multichannel clips.
    pub fn samples(&self) -> &[f64] {
        assert!(self.is_mono(), "clip must be mono; call resample_mono first");
        &self.channels[0]
    }

    /// Largest absolute sample value over all channels.
    pub fn peak(&self) -> f64 {
        self.channels.iter().flat_map(|c| c.iter()).fold(0.0_f64, |m, s| m.max(s.abs()))
    }

    /// Arithmetic channel mean.
    pub fn downmix(&self) -> Vec<f64> {
        if self.is_mono() {
            return self.channels[0].clone();
        }
        let n = self.channels.len() as f64;
        (0..self.frame_count()).map(|i| self.channels.iter().map(|c| c[i]).sum::<f64>() / n).collect()
    }

    /// Sub-clip between two times, clamped to the clip bounds.
    pub fn slice(&self, start_s: f64, end_s: f64) -> AudioClip {
        let sr = self.sample_rate as f64;
        let len = self.frame_count();
        let a = ((start_s * sr).round().max(0.0) as usize).min(len);
        let b = ((end_s * sr).round().max(0.0) as usize).clamp(a, len);
        AudioClip { channels: self.channels.iter().map(|c| c[a..b].to_vec()).collect(), sample_rate: self.sample_rate }
    }

    /// Returns a copy with every sample multiplied by `gain` (then clamped).
    pub fn scaled(&self, gain: f64) -> AudioClip {
        AudioClip::from_channels(
            self.channels.iter().map(|c| c.iter().map(|s| s * gain).collect()).collect(),
            self.sample_rate,
        )
    }
}

const WAV_HINTS: &[&str] = &["wav", "wave", "audio/wav", "audio/x-wav", "audio/wave", "audio/vnd.wave"];

/// Decodes a RIFF/WAVE file (PCM 8/16/24/32-bit or 32-bit float).
///
/// `hint` is an optional format tag (file extension or MIME type); anything
/// that is not a WAV tag is rejected without looking at the bytes.
pub fn decode_audio(bytes: &[u8], hint: Option<&str>) -> Result<AudioClip, DecodeError> {
    if bytes.is_empty() {
        return Err(DecodeError::Empty);
    }
    if let Some(h) = hint {
        let h = h.trim().trim_start_matches('.').to_ascii_lowercase();
        if !h.is_empty() && !WAV_HINTS.contains(&h.as_str()) {
            return Err(DecodeError::Unsupported(format!("format '{h}' (only RIFF/WAVE is supported)")));
        }
    }
    let reader = hound::WavReader::new(Cursor::new(bytes)).map_err(map_hound_error)?;
    let spec = reader.spec();
    let n_channels = spec.channels as usize;
    if n_channels == 0 || n_channels > 2 {
        return Err(DecodeError::Unsupported(format!("{n_channels} channels (mono or stereo only)")));
    }
    if spec.sample_rate == 0 {
        return Err(DecodeError::Unsupported("zero sample rate".into()));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<Result<_, _>>()
            .map_err(map_hound_error)?,
        (hound::SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = (1_i64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<Result<_, _>>()
                .map_err(map_hound_error)?
        }
        (fmt, bits) => return Err(DecodeError::Unsupported(format!("{bits}-bit {fmt:?} samples"))),
    };
    if interleaved.len() < n_channels {
        return Err(DecodeError::ZeroLength);
    }
    let frames = interleaved.len() / n_channels;
    let channels = (0..n_channels).map(|c| (0..frames).map(|i| interleaved[i * n_channels + c]).collect()).collect();
    Ok(AudioClip::from_channels(channels, spec.sample_rate))
}

fn map_hound_error(err: hound::Error) -> DecodeError {
    match err {
        hound::Error::IoError(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
            DecodeError::Truncated(e.to_string())
        }
        hound::Error::IoError(e) => DecodeError::Truncated(e.to_string()),
        hound::Error::FormatError(msg) => DecodeError::Unsupported(msg.to_string()),
        hound::Error::Unsupported => DecodeError::Unsupported("unsupported WAV encoding".into()),
        hound::Error::TooWide => DecodeError::Unsupported("sample width too large".into()),
        hound::Error::UnfinishedSample => DecodeError::Truncated("unfinished sample".into()),
        hound::Error::InvalidSampleFormat => DecodeError::Unsupported("invalid sample format".into()),
    }
}

/// Encodes a clip as 16-bit PCM WAV. Used for fixtures and the CLI round trip.
pub fn encode_wav_pcm16(clip: &AudioClip) -> Vec<u8> {
    let spec = hound::WavSpec {
        channels: clip.channel_count() as u16,
        sample_rate: clip.sample_rate(),
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut out = Cursor::new(Vec::new());
    {
        let mut writer = hound::WavWriter::new(&mut out, spec).expect("in-memory writer");
        for i in 0..clip.frame_count() {
            for c in 0..clip.channel_count() {
                let v = (clip.channel(c)[i] * 32767.0).round().clamp(-32768.0, 32767.0) as i16;
                writer.write_sample(v).expect("in-memory write");
            }
        }
        writer.finalize().expect("in-memory finalize");
    }
    out.into_inner()
}

/// Decodes and prepares a clip for analysis: mono at [`ANALYSIS_SAMPLE_RATE`].
pub fn load_for_analysis(bytes: &[u8], hint: Option<&str>) -> Result<AudioClip, DecodeError> {
    let clip = decode_audio(bytes, hint)?;
    Ok(resample_mono(&clip, ANALYSIS_SAMPLE_RATE))
}
