//! 16-bit mono PCM WAV at 16 kHz.

use std::io::Cursor;
use std::path::Path;

use hound::{SampleFormat, WavSpec, WavWriter};
use kws_core::signal::AudioClip;
use kws_core::SAMPLE_RATE;

use crate::error::{KwsError, Result};
use crate::fsutil::atomic_write;

const SCALE: f64 = 32768.0;

pub fn read_wav(path: &Path) -> Result<AudioClip> {
    let reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => KwsError::io(path, io),
        other => KwsError::format(path, other.to_string()),
    })?;
    let spec = reader.spec();
    if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != SampleFormat::Int {
        return Err(KwsError::format(
            path,
            format!(
                "expected 16-bit signed PCM mono, got {} channel(s) of {}-bit {:?}",
                spec.channels, spec.bits_per_sample, spec.sample_format
            ),
        ));
    }
    if spec.sample_rate != SAMPLE_RATE {
        return Err(KwsError::format(path, format!("sample rate {} Hz, expected {SAMPLE_RATE} Hz", spec.sample_rate)));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| v as f64 / SCALE))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| KwsError::format(path, e.to_string()))?;
    Ok(AudioClip::new(samples, spec.sample_rate))
}

/// Rounds to the nearest 16-bit code, saturating at full scale.
pub fn encode_wav(clip: &AudioClip) -> Result<Vec<u8>> {
    let spec = WavSpec { channels: 1, sample_rate: clip.sample_rate, bits_per_sample: 16, sample_format: SampleFormat::Int };
    let mut buf = Cursor::new(Vec::new());
    let mut w = WavWriter::new(&mut buf, spec).map_err(|e| KwsError::usage(e.to_string()))?;
    for &s in &clip.samples {
        let code = (s * SCALE).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
        w.write_sample(code).map_err(|e| KwsError::usage(e.to_string()))?;
    }
    w.finalize().map_err(|e| KwsError::usage(e.to_string()))?;
    Ok(buf.into_inner())
}

pub fn write_wav(path: &Path, clip: &AudioClip) -> Result<()> {
    atomic_write(path, &encode_wav(clip)?)
}
