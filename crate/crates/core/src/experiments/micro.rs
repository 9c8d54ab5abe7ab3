//! Synthetic twelve-class corpus for desk-scale runs.
//!
//! Each keyword class is a fixed two-segment pattern: a steady tone followed
//! by a chirp, at class-specific frequencies. Clips draw a random phase per
//! segment, amplitude jitter, a small frequency jitter and a random onset.
//! The unknown class draws one of five distractor tone pairs; silence is
//! faint brown noise. Every clip sits on a white recording floor, so no
//! frame is digitally silent.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{LabeledDataset, Split, SILENCE_CLASS, UNKNOWN_CLASS};
use crate::rng::{stream, Stream};
use crate::signal::{AudioClip, NoiseProfile};
use crate::{Result, NUM_CLASSES, SAMPLE_RATE};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicroConfig {
    pub clips_per_class: usize,
    /// Peak amplitude range of the keyword patterns.
    pub amplitude: (f64, f64),
    /// Latest onset of the pattern, seconds.
    pub max_shift_s: f64,
    /// RMS range of the white recording floor.
    pub floor_rms: (f64, f64),
}

impl Default for MicroConfig {
    fn default() -> Self {
        Self { clips_per_class: 60, amplitude: (0.3, 0.6), max_shift_s: 0.35, floor_rms: (0.005, 0.01) }
    }
}

const TONE_HZ: [f64; 10] = [300.0, 450.0, 650.0, 900.0, 1200.0, 1600.0, 2100.0, 2700.0, 3400.0, 4200.0];
const DISTRACTOR_HZ: [(f64, f64); 5] = [(380.0, 3000.0), (780.0, 520.0), (1400.0, 2400.0), (2400.0, 1000.0), (3800.0, 700.0)];
const SEG1: (f64, f64) = (0.0, 0.25);
const SEG2: (f64, f64) = (0.3, 0.3);

#[derive(Debug, Clone, Copy)]
struct Pattern {
    tone: f64,
    chirp_from: f64,
    chirp_to: f64,
}

fn keyword_pattern(c: usize) -> Pattern {
    let from = TONE_HZ[(c * 3 + 5) % 10];
    let to = if c.is_multiple_of(2) { from * 1.5 } else { from / 1.5 };
    Pattern { tone: TONE_HZ[c], chirp_from: from, chirp_to: to }
}

fn distractor_pattern(i: usize) -> Pattern {
    let (a, b) = DISTRACTOR_HZ[i];
    Pattern { tone: a, chirp_from: b, chirp_to: b }
}

fn hann(i: usize, n: usize) -> f64 {
    let x = libm::sin(PI * i as f64 / (n - 1).max(1) as f64);
    x * x
}

/// Adds a Hann-enveloped linear chirp from `f0` to `f1` Hz.
fn add_segment(out: &mut [f64], start: usize, len: usize, f0: f64, f1: f64, amp: f64, phase: f64) {
    let sr = SAMPLE_RATE as f64;
    let dur = len as f64 / sr;
    for i in 0..len {
        let Some(slot) = out.get_mut(start + i) else { break };
        let t = i as f64 / sr;
        let arg = 2.0 * PI * (f0 * t + 0.5 * (f1 - f0) / dur * t * t) + phase;
        *slot += amp * hann(i, len) * libm::sin(arg);
    }
}

fn render<R: Rng>(p: Pattern, cfg: &MicroConfig, rng: Option<&mut R>) -> Vec<f64> {
    let n = SAMPLE_RATE as usize;
    let sr = SAMPLE_RATE as f64;
    let mut out = vec![0.0; n];
    let (shift, amp, jitter, ph1, ph2) = match rng {
        Some(rng) => (
            rng.random_range(0.0..=cfg.max_shift_s),
            rng.random_range(cfg.amplitude.0..=cfg.amplitude.1),
            rng.random_range(0.97..=1.03),
            rng.random_range(0.0..2.0 * PI),
            rng.random_range(0.0..2.0 * PI),
        ),
        None => (0.0, 1.0, 1.0, 0.0, 0.0),
    };
    let at = |s: f64| ((s + shift) * sr) as usize;
    let len = |s: f64| (s * sr) as usize;
    add_segment(&mut out, at(SEG1.0), len(SEG1.1), p.tone * jitter, p.tone * jitter, amp, ph1);
    add_segment(&mut out, at(SEG2.0), len(SEG2.1), p.chirp_from * jitter, p.chirp_to * jitter, amp, ph2);
    out
}

/// Zero-phase, unshifted, unit-amplitude patterns: the ten keywords then the
/// five distractors.
pub fn micro_templates() -> Vec<Vec<f64>> {
    let cfg = MicroConfig::default();
    (0..10)
        .map(keyword_pattern)
        .chain((0..DISTRACTOR_HZ.len()).map(distractor_pattern))
        .map(|p| render::<crate::rng::Rng>(p, &cfg, None))
        .collect()
}

fn brown<R: Rng>(len: usize, rms: f64, rng: &mut R) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = (0..len)
        .map(|_| {
            acc = 0.995 * acc + rng.sample::<f64, _>(StandardNormal);
            acc
        })
        .collect();
    let mean = out.iter().sum::<f64>() / len as f64;
    let cur = libm::sqrt(out.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / len as f64);
    for v in &mut out {
        *v = (*v - mean) / cur * rms;
    }
    out
}

pub fn make_micro_dataset(seed: u64) -> Result<LabeledDataset> {
    make_micro_dataset_with(&MicroConfig::default(), seed)
}

/// Builds the corpus with an exact per-class 80/10/10 split.
pub fn make_micro_dataset_with(cfg: &MicroConfig, seed: u64) -> Result<LabeledDataset> {
    let mut rng = stream(seed, Stream::Dataset);
    let n = SAMPLE_RATE as usize;
    let mut clips = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let mut splits = Vec::new();
    for class in 0..NUM_CLASSES {
        for i in 0..cfg.clips_per_class {
            let mut samples = match class {
                SILENCE_CLASS => brown(n, rng.random_range(0.002..0.006), &mut rng),
                UNKNOWN_CLASS => {
                    let d = rng.random_range(0..DISTRACTOR_HZ.len());
                    render(distractor_pattern(d), cfg, Some(&mut rng))
                }
                c => render(keyword_pattern(c), cfg, Some(&mut rng)),
            };
            let floor = rng.random_range(cfg.floor_rms.0..=cfg.floor_rms.1);
            for v in &mut samples {
                *v += floor * rng.sample::<f64, _>(StandardNormal);
            }
            clips.push(AudioClip::new(samples, SAMPLE_RATE).with_label(class).canonicalize());
            names.push(format!("c{class:02}s{i:03}_nohash_0.wav"));
        }
        let mut order: Vec<usize> = (0..cfg.clips_per_class).collect();
        order.shuffle(&mut rng);
        let n_train = cfg.clips_per_class * 8 / 10;
        let n_val = cfg.clips_per_class / 10;
        let mut class_splits = vec![Split::Test; cfg.clips_per_class];
        for (rank, &i) in order.iter().enumerate() {
            class_splits[i] = if rank < n_train {
                Split::Train
            } else if rank < n_train + n_val {
                Split::Validation
            } else {
                Split::Test
            };
        }
        splits.extend(class_splits);
    }
    let mut ds = LabeledDataset::new(clips, names)?;
    ds.splits = splits;
    Ok(ds)
}

/// File-backed stand-in for miscellaneous recordings: three 3-second clips,
/// each a mix of traffic-like rumble with mains hum, bursts of running-water
/// hiss, and babble of short tones across the keyword band.
pub fn micro_noise_profile(seed: u64) -> Result<NoiseProfile> {
    let mut rng = stream(seed, Stream::Generator);
    let sr = SAMPLE_RATE as f64;
    let len = 3 * SAMPLE_RATE as usize;
    let mut clips = Vec::new();
    for _ in 0..3 {
        let mut s = brown(len, 0.05, &mut rng);
        let hum = rng.random_range(45.0..65.0);
        for (i, v) in s.iter_mut().enumerate() {
            let t = i as f64 / sr;
            *v += 0.02 * libm::sin(2.0 * PI * hum * t) + 0.01 * libm::sin(2.0 * PI * 3.0 * hum * t);
        }
        let bursts = rng.random_range(4..8);
        for _ in 0..bursts {
            let start = rng.random_range(0..len - 8000);
            let blen = rng.random_range(3000..8000);
            let mut prev = 0.0;
            for i in 0..blen {
                let w: f64 = rng.sample(StandardNormal);
                // First difference emphasises high frequencies.
                s[start + i] += 0.04 * hann(i, blen) * (w - prev);
                prev = w;
            }
        }
        let mut at = 0;
        while at < len {
            let blen = rng.random_range(1600..4800);
            let f0 = rng.random_range(250.0..4500.0);
            let f1 = f0 * rng.random_range(0.7..1.4);
            let amp = rng.random_range(0.02..0.08);
            let phase = rng.random_range(0.0..2.0 * PI);
            add_segment(&mut s[at..], 0, blen, f0, f1, amp, phase);
            at += rng.random_range(800..3200);
        }
        let peak = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak > 1.0 {
            for v in &mut s {
                *v /= peak;
            }
        }
        clips.push(AudioClip::new(s, SAMPLE_RATE));
    }
    NoiseProfile::file_backed("micro-misc", clips)
}
