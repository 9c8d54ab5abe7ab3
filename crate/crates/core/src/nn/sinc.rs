//! Band-pass sinc filters parameterized by two cutoff frequencies.
//!
//! A filter passing `[f1, f2]` (cycles/sample) is the difference of two
//! ideal low-pass impulse responses,
//! `h[n] = 2 f2 sinc(2 pi f2 n) - 2 f1 sinc(2 pi f1 n)`, truncated to an odd
//! length centred on `n = 0` and tapered by a Hamming window.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::features::{hz_to_mel, mel_to_hz};
use crate::{Error, Result};

/// Smallest band width the reparameterization allows, in cycles/sample.
pub const MIN_BAND: f64 = 1e-4;

const NYQUIST: f64 = 0.5;

/// Symmetric Hamming window `0.54 - 0.46 cos(2 pi m / (L - 1))`.
pub fn hamming_window(length: usize) -> Vec<f64> {
    if length == 1 {
        return alloc::vec![1.0];
    }
    (0..length)
        .map(|m| 0.54 - 0.46 * libm::cos(2.0 * PI * m as f64 / (length - 1) as f64))
        .collect()
}

fn check_length(length: usize) -> Result<()> {
    if length.is_multiple_of(2) {
        Err(Error::config("sinc kernel length must be odd"))
    } else {
        Ok(())
    }
}

/// `2 f sinc(2 pi f n)` with `sinc(0) = 1`.
#[inline]
fn lowpass(f: f64, n: f64) -> f64 {
    if n == 0.0 {
        2.0 * f
    } else {
        libm::sin(2.0 * PI * f * n) / (PI * n)
    }
}

/// Windowed band-pass kernel for cutoffs `f1 <= f2`.
pub fn sinc_kernel(f1: f64, f2: f64, length: usize) -> Result<Vec<f64>> {
    check_length(length)?;
    if f1 > f2 {
        return Err(Error::CutoffOrder { f1, f2 });
    }
    if f1 < 0.0 || f2 > NYQUIST {
        return Err(Error::config("cutoffs must lie in [0, 0.5] cycles/sample"));
    }
    let half = (length / 2) as isize;
    let window = hamming_window(length);
    Ok((0..length)
        .map(|i| {
            let n = (i as isize - half) as f64;
            (lowpass(f2, n) - lowpass(f1, n)) * window[i]
        })
        .collect())
}

/// `(dh/df1, dh/df2)` for every tap of [`sinc_kernel`]. Since
/// `d/df [2 f sinc(2 pi f n)] = 2 cos(2 pi f n)`, both are windowed cosines.
pub fn sinc_kernel_grads(f1: f64, f2: f64, window: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let half = (window.len() / 2) as isize;
    let mut d1 = Vec::with_capacity(window.len());
    let mut d2 = Vec::with_capacity(window.len());
    for (i, w) in window.iter().enumerate() {
        let n = (i as isize - half) as f64;
        d1.push(-2.0 * libm::cos(2.0 * PI * f1 * n) * w);
        d2.push(2.0 * libm::cos(2.0 * PI * f2 * n) * w);
    }
    (d1, d2)
}

/// Cutoffs derived from a learnable pair together with their Jacobian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoffs {
    pub f1: f64,
    pub f2: f64,
    pub df1_dp1: f64,
    pub df2_dp1: f64,
    pub df2_dp2: f64,
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `f1 = |p1|`, `f2 = f1 + |p2 - p1|`, clamped so that
/// `0 <= f1 < f2 <= 0.5` holds for every real pair.
pub fn reparameterize(p1: f64, p2: f64) -> Cutoffs {
    let a = p1.abs();
    let (f1, df1_dp1) = if a <= NYQUIST - MIN_BAND { (a, sign(p1)) } else { (NYQUIST - MIN_BAND, 0.0) };
    let b = f1 + (p2 - p1).abs();
    let s = sign(p2 - p1);
    let (f2, df2_dp1, df2_dp2) = if b > NYQUIST {
        (NYQUIST, 0.0, 0.0)
    } else if b < f1 + MIN_BAND {
        (f1 + MIN_BAND, df1_dp1, 0.0)
    } else {
        (b, df1_dp1 - s, s)
    };
    Cutoffs { f1, f2, df1_dp1, df2_dp1, df2_dp2 }
}

/// Learnable sinc filterbank: one `(p1, p2)` pair per filter and a shared
/// fixed window.
#[derive(Debug, Clone, PartialEq)]
pub struct SincFilterBank {
    pub kernel_length: usize,
    pub params: Vec<(f64, f64)>,
    pub window: Vec<f64>,
}

impl SincFilterBank {
    pub fn new(kernel_length: usize, params: Vec<(f64, f64)>) -> Result<Self> {
        check_length(kernel_length)?;
        Ok(Self { kernel_length, params, window: hamming_window(kernel_length) })
    }

    /// Filters whose band edges are consecutive points equally spaced on
    /// the mel scale between `low_hz` and `high_hz`.
    pub fn mel_spaced(
        num_filters: usize,
        kernel_length: usize,
        sample_rate: u32,
        low_hz: f64,
        high_hz: f64,
    ) -> Result<Self> {
        Self::new(kernel_length, mel_spaced_cutoffs(num_filters, sample_rate, low_hz, high_hz))
    }

    pub fn num_filters(&self) -> usize {
        self.params.len()
    }

    pub fn cutoffs(&self) -> Vec<Cutoffs> {
        self.params.iter().map(|&(p1, p2)| reparameterize(p1, p2)).collect()
    }

    /// Kernels stacked as conv weights `[num_filters, 1, kernel_length]`.
    pub fn kernels(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.params.len() * self.kernel_length);
        for c in self.cutoffs() {
            out.extend(windowed(c.f1, c.f2, &self.window));
        }
        out
    }
}

/// Band-pass taps for cutoffs already known to be ordered and in range.
pub(crate) fn windowed(f1: f64, f2: f64, window: &[f64]) -> impl Iterator<Item = f64> + '_ {
    let half = (window.len() / 2) as isize;
    window.iter().enumerate().map(move |(i, w)| {
        let n = (i as isize - half) as f64;
        (lowpass(f2, n) - lowpass(f1, n)) * w
    })
}

/// Normalized `(f1, f2)` pairs from mel-spaced band edges.
pub fn mel_spaced_cutoffs(num_filters: usize, sample_rate: u32, low_hz: f64, high_hz: f64) -> Vec<(f64, f64)> {
    let lo = hz_to_mel(low_hz);
    let hi = hz_to_mel(high_hz);
    let sr = sample_rate as f64;
    let edges: Vec<f64> = (0..=num_filters)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / num_filters as f64) / sr)
        .collect();
    edges.windows(2).map(|e| (e[0], e[1])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_cutoffs_cancel() {
        assert!(sinc_kernel(0.1, 0.1, 31).unwrap().iter().all(|&h| h == 0.0));
    }

    #[test]
    fn centre_tap_is_band_width() {
        let h = sinc_kernel(0.05, 0.15, 101).unwrap();
        let w = hamming_window(101);
        assert!((h[50] - 2.0 * 0.1 * w[50]).abs() < 1e-15);
        assert!((w[50] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn even_length_and_ordering_errors() {
        assert!(matches!(sinc_kernel(0.1, 0.2, 100), Err(Error::Config(_))));
        assert!(matches!(sinc_kernel(0.2, 0.1, 101), Err(Error::CutoffOrder { .. })));
        assert!(SincFilterBank::new(100, alloc::vec![]).is_err());
    }

    #[test]
    fn reparameterization_orders_cutoffs() {
        for &(p1, p2) in &[(0.1, 0.2), (0.2, 0.1), (-0.3, 0.4), (0.7, -2.0), (0.0, 0.0), (0.45, 0.45)] {
            let c = reparameterize(p1, p2);
            assert!(0.0 <= c.f1 && c.f1 < c.f2 && c.f2 <= 0.5, "{p1} {p2} -> {c:?}");
        }
        let c = reparameterize(0.1, 0.25);
        assert!((c.f1 - 0.1).abs() < 1e-15 && (c.f2 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn mel_init_covers_band() {
        let bank = SincFilterBank::mel_spaced(40, 101, 16000, 30.0, 7800.0).unwrap();
        let cut = bank.cutoffs();
        assert_eq!(cut.len(), 40);
        assert!((cut[0].f1 - 30.0 / 16000.0).abs() < 1e-12);
        assert!((cut[39].f2 - 7800.0 / 16000.0).abs() < 1e-12);
        for w in cut.windows(2) {
            assert!((w[0].f2 - w[1].f1).abs() < 1e-12);
        }
    }
}
