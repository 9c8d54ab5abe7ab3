//! Speech Commands ingestion and noise directories.

use std::fs;
use std::path::{Path, PathBuf};

use kws_core::experiments::{hash_fraction, LabeledDataset, KEYWORDS, SILENCE_CLASS, UNKNOWN_CLASS};
use kws_core::rng::{stream, Stream};
use kws_core::signal::{signal_power, AudioClip, NoiseProfile};
use kws_core::SAMPLE_RATE;
use rand::Rng;

use crate::error::{KwsError, Result};
use crate::wav::read_wav;

pub const BACKGROUND_DIR: &str = "_background_noise_";
/// Silence clips are scaled to this fraction of the corpus mean RMS.
pub const SILENCE_GAIN: f64 = 0.1;

/// A loaded dataset plus the warnings raised while reading it.
#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub value: T,
    pub warnings: Vec<String>,
}

fn warn(warnings: &mut Vec<String>, msg: String) {
    log::warn!("{msg}");
    warnings.push(msg);
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let rd = fs::read_dir(dir).map_err(|e| KwsError::io(dir, e))?;
    let mut out = Vec::new();
    for entry in rd {
        out.push(entry.map_err(|e| KwsError::io(dir, e))?.path());
    }
    out.sort();
    Ok(out)
}

fn is_wav(p: &Path) -> bool {
    p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav"))
}

/// Reads every WAV directly inside `dir`, skipping unreadable ones.
fn read_wavs(dir: &Path, warnings: &mut Vec<String>) -> Result<Vec<(PathBuf, AudioClip)>> {
    let mut out = Vec::new();
    for p in sorted_entries(dir)?.into_iter().filter(|p| is_wav(p)) {
        match read_wav(&p) {
            Ok(c) => out.push((p, c)),
            Err(e) => warn(warnings, format!("skipping {e}")),
        }
    }
    Ok(out)
}

fn rms(clip: &AudioClip) -> f64 {
    signal_power(clip).map(f64::sqrt).unwrap_or(0.0)
}

/// Loads a Speech Commands tree: one subdirectory per word plus
/// `_background_noise_`.
///
/// The ten keywords become classes 0-9 and every other word the unknown
/// class, subsampled (by a seeded hash of the file name) to the mean
/// keyword count. As many silence clips are cut from the background
/// recordings and scaled to [`SILENCE_GAIN`] times the corpus mean RMS.
/// All clips are canonicalized to one second. Splits are left for
/// [`kws_core::experiments::split_dataset`].
pub fn load_speech_commands(root: &Path, seed: u64) -> Result<Loaded<LabeledDataset>> {
    if !root.is_dir() {
        return Err(KwsError::io(root, std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory")));
    }
    let mut warnings = Vec::new();
    let mut keyword: Vec<(String, AudioClip)> = Vec::new();
    let mut unknown: Vec<(String, AudioClip)> = Vec::new();
    let mut background = Vec::new();
    for dir in sorted_entries(root)?.into_iter().filter(|p| p.is_dir()) {
        let word = dir.file_name().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        if word.starts_with('.') {
            continue;
        }
        if word == BACKGROUND_DIR {
            background = read_wavs(&dir, &mut warnings)?;
            continue;
        }
        let class = KEYWORDS.iter().position(|k| *k == word).unwrap_or(UNKNOWN_CLASS);
        for (p, clip) in read_wavs(&dir, &mut warnings)? {
            let name = format!("{word}/{}", p.file_name().unwrap().to_string_lossy());
            let clip = clip.canonicalize().with_label(class);
            if class == UNKNOWN_CLASS {
                unknown.push((name, clip));
            } else {
                keyword.push((name, clip));
            }
        }
    }
    if keyword.is_empty() && unknown.is_empty() {
        return Err(KwsError::Core(kws_core::Error::Dataset(format!("no WAV files under {}", root.display()))));
    }

    let mut counts = [0usize; KEYWORDS.len()];
    for (_, c) in &keyword {
        counts[c.label.unwrap()] += 1;
    }
    for (k, n) in KEYWORDS.iter().zip(counts) {
        if n == 0 {
            warn(&mut warnings, format!("keyword `{k}` has no clips"));
        }
    }
    let populated: Vec<usize> = counts.iter().copied().filter(|&n| n > 0).collect();
    let target = if populated.is_empty() {
        unknown.len()
    } else {
        (populated.iter().sum::<usize>() as f64 / populated.len() as f64).round() as usize
    };
    unknown.sort_by(|a, b| hash_fraction(&a.0, seed).total_cmp(&hash_fraction(&b.0, seed)).then(a.0.cmp(&b.0)));
    unknown.truncate(target);
    unknown.sort_by(|a, b| a.0.cmp(&b.0));

    let speech: Vec<(String, AudioClip)> = keyword.into_iter().chain(unknown).collect();
    let mean_rms = speech.iter().map(|(_, c)| rms(c)).sum::<f64>() / speech.len() as f64;

    let mut sources = Vec::new();
    for (p, clip) in background {
        if clip.len() < SAMPLE_RATE as usize {
            warn(&mut warnings, format!("skipping {}: shorter than one second", p.display()));
        } else {
            sources.push(clip);
        }
    }
    let mut silence = Vec::new();
    if sources.is_empty() {
        warn(&mut warnings, format!("no usable {BACKGROUND_DIR} recordings; silence class is empty"));
    } else {
        let mut rng = stream(seed, Stream::Dataset);
        let n = SAMPLE_RATE as usize;
        for i in 0..target {
            let src = &sources[rng.random_range(0..sources.len())];
            let off = rng.random_range(0..=src.len() - n);
            let mut clip = AudioClip::new(src.samples[off..off + n].to_vec(), SAMPLE_RATE);
            let r = rms(&clip);
            if r > 0.0 {
                let k = SILENCE_GAIN * mean_rms / r;
                clip.samples.iter_mut().for_each(|s| *s *= k);
            }
            silence.push((format!("{BACKGROUND_DIR}/silence{i:05}_nohash_0.wav"), clip.canonicalize().with_label(SILENCE_CLASS)));
        }
    }

    let (names, clips): (Vec<String>, Vec<AudioClip>) = speech.into_iter().chain(silence).unzip();
    Ok(Loaded { value: LabeledDataset::new(clips, names)?, warnings })
}

/// File-backed noise profile from every WAV of at least one second in `dir`.
pub fn load_noise_dir(dir: &Path) -> Result<Loaded<NoiseProfile>> {
    let mut warnings = Vec::new();
    if !dir.is_dir() {
        return Err(KwsError::io(dir, std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory")));
    }
    let mut clips = Vec::new();
    for (p, clip) in read_wavs(dir, &mut warnings)? {
        if clip.len() < SAMPLE_RATE as usize {
            warn(&mut warnings, format!("skipping {}: shorter than one second", p.display()));
        } else {
            clips.push(clip);
        }
    }
    if clips.is_empty() {
        return Err(KwsError::usage(format!("{}: no WAV noise recordings of at least one second", dir.display())));
    }
    let name = dir.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "noise".into());
    Ok(Loaded { value: NoiseProfile::file_backed(name, clips)?, warnings })
}
