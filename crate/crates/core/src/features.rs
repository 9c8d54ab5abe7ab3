//! MFCC front-end.
//!
//! Per frame: pre-emphasis, Hann window, power spectrum, triangular mel
//! filterbank, natural log floored at `log_floor`, orthonormal DCT-II.
//! Pre-emphasis runs over the whole clip before framing.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::signal::AudioClip;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MfccConfig {
    pub sample_rate: u32,
    pub window_ms: f64,
    pub hop_ms: f64,
    pub num_filters: usize,
    pub num_coefficients: usize,
    pub low_hz: f64,
    pub high_hz: f64,
    pub pre_emphasis: f64,
    pub log_floor: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            sample_rate: crate::SAMPLE_RATE,
            window_ms: 30.0,
            hop_ms: 10.0,
            num_filters: 40,
            num_coefficients: 40,
            low_hz: 20.0,
            high_hz: 7600.0,
            pre_emphasis: 0.97,
            log_floor: 1e-10,
        }
    }
}

impl MfccConfig {
    pub fn window_samples(&self) -> usize {
        libm::round(self.window_ms * self.sample_rate as f64 / 1000.0) as usize
    }

    pub fn hop_samples(&self) -> usize {
        libm::round(self.hop_ms * self.sample_rate as f64 / 1000.0) as usize
    }

    pub fn fft_size(&self) -> usize {
        self.window_samples().next_power_of_two()
    }

    /// `1 + floor((clip_len - window) / hop)`, or 0 when the clip is shorter
    /// than one window.
    pub fn num_frames(&self, clip_len: usize) -> usize {
        let win = self.window_samples();
        if clip_len < win {
            0
        } else {
            1 + (clip_len - win) / self.hop_samples()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.num_filters == 0 || self.num_coefficients == 0 {
            return Err(Error::config("MFCC needs at least one filter and one coefficient"));
        }
        if self.num_coefficients > self.num_filters {
            return Err(Error::config("cannot keep more coefficients than mel filters"));
        }
        if self.window_samples() == 0 || self.hop_samples() == 0 {
            return Err(Error::config("MFCC window and hop must span at least one sample"));
        }
        let nyquist = self.sample_rate as f64 / 2.0;
        if !(0.0 <= self.low_hz && self.low_hz < self.high_hz && self.high_hz <= nyquist) {
            return Err(Error::config("mel band edges must satisfy 0 <= low < high <= Nyquist"));
        }
        if !(self.log_floor > 0.0) {
            return Err(Error::config("log floor must be positive"));
        }
        Ok(())
    }
}

/// Frames x coefficients grid, stored frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub values: Vec<f64>,
    pub frames: usize,
    pub num_coefficients: usize,
    pub frame_hop_ms: f64,
    pub window_length_ms: f64,
}

impl FeatureMap {
    pub fn get(&self, frame: usize, coefficient: usize) -> f64 {
        self.values[frame * self.num_coefficients + coefficient]
    }

    /// Coefficient-major copy: coefficients become channels and frames the
    /// time axis of a temporal convolution.
    pub fn to_channel_major(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.values.len()];
        for f in 0..self.frames {
            for c in 0..self.num_coefficients {
                out[c * self.frames + f] = self.values[f * self.num_coefficients + c];
            }
        }
        out
    }
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * libm::log10(1.0 + hz / 700.0)
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (libm::pow(10.0, mel / 2595.0) - 1.0)
}

/// Reusable MFCC extractor with precomputed window, filterbank and DCT.
#[derive(Debug, Clone)]
pub struct MfccExtractor {
    config: MfccConfig,
    window: Vec<f64>,
    /// `num_filters` rows of `fft_size/2 + 1` weights.
    filterbank: Vec<Vec<f64>>,
    centers_hz: Vec<f64>,
    /// `num_coefficients` rows of `num_filters` weights.
    dct: Vec<Vec<f64>>,
}

impl MfccExtractor {
    pub fn new(config: MfccConfig) -> Result<Self> {
        config.validate()?;
        let win = config.window_samples();
        let nfft = config.fft_size();
        let bins = nfft / 2 + 1;
        // periodic Hann
        let window = (0..win).map(|i| 0.5 - 0.5 * libm::cos(2.0 * PI * i as f64 / win as f64)).collect();

        let m = config.num_filters;
        let lo = hz_to_mel(config.low_hz);
        let hi = hz_to_mel(config.high_hz);
        let edges: Vec<f64> =
            (0..m + 2).map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (m + 1) as f64)).collect();
        let bin_hz = config.sample_rate as f64 / nfft as f64;
        let filterbank = (0..m)
            .map(|j| {
                let (left, center, right) = (edges[j], edges[j + 1], edges[j + 2]);
                (0..bins)
                    .map(|k| {
                        let f = k as f64 * bin_hz;
                        if f <= left || f >= right {
                            0.0
                        } else if f <= center {
                            (f - left) / (center - left)
                        } else {
                            (right - f) / (right - center)
                        }
                    })
                    .collect()
            })
            .collect();
        let centers_hz = edges[1..=m].to_vec();

        let dct = (0..config.num_coefficients)
            .map(|k| {
                let scale = if k == 0 { libm::sqrt(1.0 / m as f64) } else { libm::sqrt(2.0 / m as f64) };
                (0..m)
                    .map(|i| scale * libm::cos(PI * k as f64 * (i as f64 + 0.5) / m as f64))
                    .collect()
            })
            .collect();

        Ok(Self { config, window, filterbank, centers_hz, dct })
    }

    pub fn config(&self) -> &MfccConfig {
        &self.config
    }

    /// Center frequency of every mel filter in Hz.
    pub fn filter_centers_hz(&self) -> &[f64] {
        &self.centers_hz
    }

    /// Log-mel energies, frame-major `frames x num_filters`.
    pub fn log_mel(&self, samples: &[f64]) -> Result<(Vec<f64>, usize)> {
        let frames = self.config.num_frames(samples.len());
        if frames == 0 {
            return Err(Error::shape("clip shorter than one MFCC window"));
        }
        let pre = self.pre_emphasize(samples);
        let win = self.window.len();
        let hop = self.config.hop_samples();
        let nfft = self.config.fft_size();
        let m = self.config.num_filters;
        let mut out = Vec::with_capacity(frames * m);
        let mut re = vec![0.0; nfft];
        let mut im = vec![0.0; nfft];
        let mut power = vec![0.0; nfft / 2 + 1];
        for f in 0..frames {
            let start = f * hop;
            for i in 0..nfft {
                re[i] = if i < win { pre[start + i] * self.window[i] } else { 0.0 };
                im[i] = 0.0;
            }
            fft_in_place(&mut re, &mut im);
            for (k, p) in power.iter_mut().enumerate() {
                *p = re[k] * re[k] + im[k] * im[k];
            }
            for filter in &self.filterbank {
                let e: f64 = filter.iter().zip(&power).map(|(w, p)| w * p).sum();
                out.push(libm::log(e.max(self.config.log_floor)));
            }
        }
        Ok((out, frames))
    }

    pub fn extract(&self, clip: &AudioClip) -> Result<FeatureMap> {
        let (log_mel, frames) = self.log_mel(&clip.samples)?;
        let m = self.config.num_filters;
        let k = self.config.num_coefficients;
        let mut values = Vec::with_capacity(frames * k);
        for row in log_mel.chunks_exact(m) {
            for basis in &self.dct {
                values.push(basis.iter().zip(row).map(|(b, x)| b * x).sum());
            }
        }
        Ok(FeatureMap {
            values,
            frames,
            num_coefficients: k,
            frame_hop_ms: self.config.hop_ms,
            window_length_ms: self.config.window_ms,
        })
    }

    fn pre_emphasize(&self, samples: &[f64]) -> Vec<f64> {
        let a = self.config.pre_emphasis;
        let mut out = Vec::with_capacity(samples.len());
        let mut prev = 0.0;
        for &s in samples {
            out.push(s - a * prev);
            prev = s;
        }
        out
    }
}

/// One-shot MFCC of `clip` under `config`.
pub fn mfcc(clip: &AudioClip, config: &MfccConfig) -> Result<FeatureMap> {
    MfccExtractor::new(config.clone())?.extract(clip)
}

/// Iterative radix-2 decimation-in-time FFT. `re.len()` must be a power of two.
pub fn fft_in_place(re: &mut [f64], im: &mut [f64]) {
    let n = re.len();
    debug_assert!(n.is_power_of_two() && im.len() == n);
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            re.swap(i, j);
            im.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let angle = -2.0 * PI / len as f64;
        let (w_im, w_re) = libm::sincos(angle);
        for start in (0..n).step_by(len) {
            let (mut cr, mut ci) = (1.0, 0.0);
            for k in 0..len / 2 {
                let a = start + k;
                let b = a + len / 2;
                let tr = re[b] * cr - im[b] * ci;
                let ti = re[b] * ci + im[b] * cr;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
                let next = cr * w_re - ci * w_im;
                ci = cr * w_im + ci * w_re;
                cr = next;
            }
        }
        len <<= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{generate_pink, silence};
    use crate::SAMPLE_RATE;

    fn naive_dft(x: &[f64]) -> Vec<(f64, f64)> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter().enumerate().fold((0.0, 0.0), |(r, i), (t, v)| {
                    let a = -2.0 * PI * (k * t) as f64 / n as f64;
                    (r + v * libm::cos(a), i + v * libm::sin(a))
                })
            })
            .collect()
    }

    #[test]
    fn fft_matches_naive_dft() {
        let x: Vec<f64> = (0..64).map(|i| libm::sin(i as f64 * 0.37) + 0.1 * i as f64).collect();
        let mut re = x.clone();
        let mut im = vec![0.0; 64];
        fft_in_place(&mut re, &mut im);
        for (k, (r, i)) in naive_dft(&x).into_iter().enumerate() {
            assert!((re[k] - r).abs() < 1e-9 && (im[k] - i).abs() < 1e-9);
        }
    }

    #[test]
    fn default_geometry_is_98_by_40() {
        let map = mfcc(&generate_pink(16000, 1).unwrap(), &MfccConfig::default()).unwrap();
        assert_eq!((map.frames, map.num_coefficients), (98, 40));
        assert!(map.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn silence_gives_floor_constant() {
        let cfg = MfccConfig::default();
        let map = mfcc(&silence(SAMPLE_RATE), &cfg).unwrap();
        let c0 = cfg.num_filters as f64 * libm::log(1e-10) * libm::sqrt(1.0 / cfg.num_filters as f64);
        for f in 0..map.frames {
            assert!((map.get(f, 0) - c0).abs() < 1e-9);
            for k in 1..map.num_coefficients {
                assert!(map.get(f, k).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sine_peaks_in_nearest_filter() {
        let ex = MfccExtractor::new(MfccConfig::default()).unwrap();
        let tone: Vec<f64> =
            (0..16000).map(|i| 0.5 * libm::sin(2.0 * PI * 1000.0 * i as f64 / 16000.0)).collect();
        let (log_mel, frames) = ex.log_mel(&tone).unwrap();
        let nearest = ex
            .filter_centers_hz()
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - 1000.0).abs().total_cmp(&(b.1 - 1000.0).abs()))
            .unwrap()
            .0;
        for row in log_mel.chunks_exact(40).take(frames) {
            let argmax = row.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
            assert_eq!(argmax, nearest);
        }
    }

    #[test]
    fn zero_filters_is_a_config_error() {
        let cfg = MfccConfig { num_filters: 0, ..MfccConfig::default() };
        assert!(matches!(mfcc(&silence(SAMPLE_RATE), &cfg), Err(Error::Config(_))));
        let cfg = MfccConfig { num_coefficients: 0, ..MfccConfig::default() };
        assert!(matches!(mfcc(&silence(SAMPLE_RATE), &cfg), Err(Error::Config(_))));
    }
}
