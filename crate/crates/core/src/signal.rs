//! Audio buffers, calibrated noise generators and SNR-exact mixing.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng as _, RngCore};
use rand_distr::StandardNormal;

use crate::rng::{self, Stream};
use crate::{Error, Result, SAMPLE_RATE};

/// RMS every generated noise buffer is normalized to.
pub const NOISE_RMS: f64 = 0.1;

/// Number of Voss-McCartney rows. Row `k` holds its value for `2^(k+1)`
/// samples, so 16 rows reach far below 20 Hz at 16 kHz.
const PINK_ROWS: usize = 16;

/// Mono waveform with nominal amplitude range [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub label: Option<usize>,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Self {
        Self { samples, sample_rate, label: None }
    }

    pub fn with_label(mut self, label: usize) -> Self {
        self.label = Some(label);
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Largest absolute sample value (0 for an empty clip).
    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| f64::max(m, s.abs()))
    }

    /// Forces the clip to exactly one second: zero-pads short clips at the
    /// tail, truncates long ones, and clamps samples into [-1, 1].
    pub fn canonicalize(mut self) -> Self {
        let target = self.sample_rate as usize;
        self.samples.resize(target, 0.0);
        for s in &mut self.samples {
            *s = s.clamp(-1.0, 1.0);
        }
        self
    }

    /// True when the clip is one second long with every sample in [-1, 1].
    pub fn is_canonical(&self) -> bool {
        self.samples.len() == self.sample_rate as usize && self.peak() <= 1.0
    }
}

/// Signal-to-noise ratio in decibels.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SnrDb(f64);

impl SnrDb {
    /// Lower edge of the experiment SNR range.
    pub const MIN_EXPERIMENT: f64 = -5.0;
    /// Upper edge of the experiment SNR range.
    pub const MAX_EXPERIMENT: f64 = 10.0;

    pub fn new(db: f64) -> Result<Self> {
        if db.is_finite() {
            Ok(Self(db))
        } else {
            Err(Error::config("SNR must be a finite number of decibels"))
        }
    }

    pub fn db(self) -> f64 {
        self.0
    }

    /// Linear power ratio `10^(dB/10)`.
    pub fn power_ratio(self) -> f64 {
        libm::pow(10.0, self.0 / 10.0)
    }

    pub fn in_experiment_range(self) -> bool {
        (Self::MIN_EXPERIMENT..=Self::MAX_EXPERIMENT).contains(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    White,
    Pink,
    FileBacked,
}

impl NoiseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::White => "white",
            NoiseKind::Pink => "pink",
            NoiseKind::FileBacked => "file",
        }
    }
}

/// A source of noise chunks.
///
/// White and pink profiles synthesize fresh noise for each chunk; the
/// profile seed is mixed into the per-chunk seed so two profiles of the same
/// kind stay distinct. File-backed profiles slice stored recordings.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseProfile {
    pub kind: NoiseKind,
    pub name: String,
    pub source_clips: Vec<AudioClip>,
    pub seed: u64,
}

impl NoiseProfile {
    pub fn white(seed: u64) -> Self {
        Self { kind: NoiseKind::White, name: "white".into(), source_clips: Vec::new(), seed }
    }

    pub fn pink(seed: u64) -> Self {
        Self { kind: NoiseKind::Pink, name: "pink".into(), source_clips: Vec::new(), seed }
    }

    /// File-backed profile; every clip must hold at least one second of audio.
    pub fn file_backed(name: impl Into<String>, clips: Vec<AudioClip>) -> Result<Self> {
        if clips.is_empty() {
            return Err(Error::config("file-backed noise profile needs at least one clip"));
        }
        if let Some(short) = clips.iter().find(|c| c.len() < c.sample_rate as usize) {
            return Err(Error::InsufficientNoise {
                available: short.len(),
                requested: short.sample_rate as usize,
            });
        }
        Ok(Self { kind: NoiseKind::FileBacked, name: name.into(), source_clips: clips, seed: 0 })
    }
}

/// Zero-mean Gaussian noise rescaled to RMS 0.1.
pub fn generate_white(length: usize, seed: u64) -> Result<AudioClip> {
    if length == 0 {
        return Err(Error::EmptyBuffer);
    }
    let mut rng = rng::stream(seed, Stream::Generator);
    let samples: Vec<f64> = (0..length).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    normalize_rms(samples)
}

/// 1/f noise from Voss-McCartney multi-rate summation, rescaled to RMS 0.1.
///
/// Row `k` is redrawn whenever the running sample index has exactly `k`
/// trailing zero bits; one extra white term is redrawn every sample.
pub fn generate_pink(length: usize, seed: u64) -> Result<AudioClip> {
    if length == 0 {
        return Err(Error::EmptyBuffer);
    }
    let mut rng = rng::stream(seed, Stream::Generator);
    let mut rows = [0.0f64; PINK_ROWS];
    for r in &mut rows {
        *r = rng.sample(StandardNormal);
    }
    let mut running: f64 = rows.iter().sum();
    let mut samples = Vec::with_capacity(length);
    for n in 1..=length as u64 {
        let row = n.trailing_zeros() as usize;
        if row < PINK_ROWS {
            let fresh: f64 = rng.sample(StandardNormal);
            running += fresh - rows[row];
            rows[row] = fresh;
        }
        let white: f64 = rng.sample(StandardNormal);
        samples.push(running + white);
    }
    let mean = samples.iter().sum::<f64>() / length as f64;
    for s in &mut samples {
        *s -= mean;
    }
    normalize_rms(samples)
}

fn normalize_rms(mut samples: Vec<f64>) -> Result<AudioClip> {
    let power = mean_square(&samples)?;
    if power <= 0.0 {
        return Err(Error::DegenerateInput("generated noise has zero power".into()));
    }
    let scale = NOISE_RMS / libm::sqrt(power);
    for s in &mut samples {
        *s *= scale;
    }
    Ok(AudioClip::new(samples, SAMPLE_RATE))
}

/// Draws one noise chunk of `length` samples from `profile`.
pub fn sample_noise_chunk<R: RngCore>(
    profile: &NoiseProfile,
    length: usize,
    rng: &mut R,
) -> Result<AudioClip> {
    match profile.kind {
        NoiseKind::White => generate_white(length, rng.next_u64() ^ profile.seed),
        NoiseKind::Pink => generate_pink(length, rng.next_u64() ^ profile.seed),
        NoiseKind::FileBacked => {
            if length == 0 {
                return Err(Error::EmptyBuffer);
            }
            if profile.source_clips.is_empty() {
                return Err(Error::config("file-backed noise profile has no clips"));
            }
            if let Some(short) = profile.source_clips.iter().find(|c| c.len() < length) {
                return Err(Error::InsufficientNoise { available: short.len(), requested: length });
            }
            let clip = &profile.source_clips[rng.random_range(0..profile.source_clips.len())];
            let offset = rng.random_range(0..=clip.len() - length);
            Ok(AudioClip::new(clip.samples[offset..offset + length].to_vec(), clip.sample_rate))
        }
    }
}

/// Mean-square power `(1/N) Σ s²`.
pub fn signal_power(clip: &AudioClip) -> Result<f64> {
    mean_square(&clip.samples)
}

pub(crate) fn mean_square(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    Ok(samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64)
}

/// Result of [`mix_at_snr`]: the mixture plus the two scale factors that
/// produced it, so callers can reconstruct each component.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub clip: AudioClip,
    /// Factor applied to the noise before summation.
    pub noise_scale: f64,
    /// Shared anti-clipping gain applied to the sum, in (0, 1].
    pub gain: f64,
}

impl Mixture {
    /// `gain * clean`, the clean component as it appears in the output.
    pub fn clean_component(&self, clean: &AudioClip) -> Vec<f64> {
        clean.samples.iter().map(|s| s * self.gain).collect()
    }

    /// `gain * noise_scale * noise`, the noise component in the output.
    pub fn noise_component(&self, noise: &AudioClip) -> Vec<f64> {
        let k = self.gain * self.noise_scale;
        noise.samples.iter().map(|s| s * k).collect()
    }
}

/// Adds `noise` to `clean` so the clean-to-noise power ratio is exactly `snr`.
///
/// The mixture is then multiplied by one shared gain `min(1, 1/peak)` so no
/// sample exceeds 1.0. Scaling both components by the same factor leaves
/// their power ratio untouched.
pub fn mix_at_snr(clean: &AudioClip, noise: &AudioClip, snr: SnrDb) -> Result<Mixture> {
    if clean.len() != noise.len() {
        return Err(Error::shape(alloc::format!(
            "clean has {} samples, noise has {}",
            clean.len(),
            noise.len()
        )));
    }
    if clean.sample_rate != noise.sample_rate {
        return Err(Error::shape(alloc::format!(
            "clean at {} Hz, noise at {} Hz",
            clean.sample_rate,
            noise.sample_rate
        )));
    }
    let p_clean = signal_power(clean)?;
    let p_noise = signal_power(noise)?;
    if p_clean <= 0.0 {
        return Err(Error::DegenerateInput("clean signal has zero power".into()));
    }
    if p_noise <= 0.0 {
        return Err(Error::DegenerateInput("noise has zero power".into()));
    }
    let noise_scale = libm::sqrt(p_clean / (p_noise * snr.power_ratio()));
    let mut mixed: Vec<f64> =
        clean.samples.iter().zip(&noise.samples).map(|(c, n)| c + noise_scale * n).collect();
    let peak = mixed.iter().fold(0.0, |m: f64, s| m.max(s.abs()));
    let mut gain = if peak > 1.0 { 1.0 / peak } else { 1.0 };
    // 1/peak * peak can round above 1.0
    while peak * gain > 1.0 {
        gain = f64::from_bits(gain.to_bits() - 1);
    }
    if gain != 1.0 {
        for s in &mut mixed {
            *s *= gain;
        }
    }
    let clip = AudioClip { samples: mixed, sample_rate: clean.sample_rate, label: clean.label };
    Ok(Mixture { clip, noise_scale, gain })
}

/// Component SNR in dB of two equally long buffers.
pub fn component_snr_db(clean: &[f64], noise: &[f64]) -> Result<f64> {
    let pc = mean_square(clean)?;
    let pn = mean_square(noise)?;
    if pn <= 0.0 {
        return Err(Error::DegenerateInput("noise component has zero power".into()));
    }
    Ok(10.0 * libm::log10(pc / pn))
}

/// A one-second silent clip.
pub fn silence(sample_rate: u32) -> AudioClip {
    AudioClip::new(vec![0.0; sample_rate as usize], sample_rate)
}
