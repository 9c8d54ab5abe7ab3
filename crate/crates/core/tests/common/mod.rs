//! Test-side reference implementations, written directly from the layer
//! definitions and independent of the library kernels.

#![allow(dead_code)]

use std::f64::consts::PI;

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}

pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| rel_err(*x, *y)).fold(0.0, f64::max)
}

/// Elementwise error measured against the scale of `b`, so entries that
/// cancel to ~0 are not judged in isolation.
pub fn scaled_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / scale).fold(0.0, f64::max)
}

/// Direct grouped cross-correlation with TensorFlow-style "same" padding:
/// `T_out = ceil(T / s)`, total padding `max((T_out - 1) s + K - T, 0)`,
/// the left side getting the floor of half.
#[allow(clippy::too_many_arguments)]
pub fn conv1d(x: &[f64], n: usize, c_in: usize, t: usize, w: &[f64], c_out: usize, k: usize, stride: usize, groups: usize) -> Vec<f64> {
    let t_out = (t + stride - 1) / stride;
    let total = ((t_out - 1) * stride + k).saturating_sub(t);
    let left = total / 2;
    let cig = c_in / groups;
    let cog = c_out / groups;
    let mut y = vec![0.0; n * c_out * t_out];
    for b in 0..n {
        for o in 0..c_out {
            let g = o / cog;
            for to in 0..t_out {
                let mut acc = 0.0;
                for ci in 0..cig {
                    let c = g * cig + ci;
                    for j in 0..k {
                        let pos = (to * stride + j) as isize - left as isize;
                        if pos >= 0 && (pos as usize) < t {
                            acc += w[(o * cig + ci) * k + j] * x[(b * c_in + c) * t + pos as usize];
                        }
                    }
                }
                y[(b * c_out + o) * t_out + to] = acc;
            }
        }
    }
    y
}

pub fn avg_pool(x: &[f64], rows: usize, t: usize, window: usize, stride: usize) -> Vec<f64> {
    let t_out = (t - window) / stride + 1;
    let mut y = Vec::with_capacity(rows * t_out);
    for r in 0..rows {
        for i in 0..t_out {
            let s: f64 = (0..window).map(|j| x[r * t + i * stride + j]).sum();
            y.push(s / window as f64);
        }
    }
    y
}

/// `x [N, F]`, `w [O, F]` -> `[N, O]`.
pub fn dense(x: &[f64], n: usize, f: usize, w: &[f64], o: usize) -> Vec<f64> {
    let mut y = vec![0.0; n * o];
    for b in 0..n {
        for j in 0..o {
            y[b * o + j] = (0..f).map(|i| x[b * f + i] * w[j * f + i]).sum();
        }
    }
    y
}

/// Per-channel statistics over batch and time: `(mean, biased variance)`.
pub fn channel_stats(x: &[f64], n: usize, c: usize, t: usize) -> (Vec<f64>, Vec<f64>) {
    let mut mean = vec![0.0; c];
    let mut var = vec![0.0; c];
    for ch in 0..c {
        let vals: Vec<f64> = (0..n).flat_map(|b| (0..t).map(move |i| (b, i))).map(|(b, i)| x[(b * c + ch) * t + i]).collect();
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        mean[ch] = m;
        var[ch] = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / vals.len() as f64;
    }
    (mean, var)
}

#[allow(clippy::too_many_arguments)]
pub fn batchnorm(x: &[f64], n: usize, c: usize, t: usize, mean: &[f64], var: &[f64], gamma: &[f64], beta: &[f64], eps: f64) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    for b in 0..n {
        for ch in 0..c {
            for i in 0..t {
                let idx = (b * c + ch) * t + i;
                y[idx] = gamma[ch] * (x[idx] - mean[ch]) / (var[ch] + eps).sqrt() + beta[ch];
            }
        }
    }
    y
}

/// Central finite-difference gradient of `f` at `x`.
pub fn fd_grad(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            let o = p[i];
            p[i] = o + h;
            let a = f(&p);
            p[i] = o - h;
            let b = f(&p);
            p[i] = o;
            (a - b) / (2.0 * h)
        })
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `|sum_n h[n] e^{-2 pi i f (n - c)}|` for a kernel centred at `c`.
pub fn dtft_mag(h: &[f64], f: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (i, v) in h.iter().enumerate() {
        let a = -2.0 * PI * f * i as f64;
        re += v * a.cos();
        im += v * a.sin();
    }
    (re * re + im * im).sqrt()
}

/// Welch power spectrum: Hann-windowed segments of `seg` samples, 50%
/// overlap, direct DFT. Returns power per bin `0..=seg/2`.
pub fn welch(x: &[f64], seg: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..seg).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / seg as f64).cos()).collect();
    let bins = seg / 2 + 1;
    let mut acc = vec![0.0; bins];
    let mut count = 0;
    let tw: Vec<(f64, f64)> = (0..seg).map(|i| ((2.0 * PI * i as f64 / seg as f64).cos(), (2.0 * PI * i as f64 / seg as f64).sin())).collect();
    let mut start = 0;
    while start + seg <= x.len() {
        let s: Vec<f64> = (0..seg).map(|i| x[start + i] * w[i]).collect();
        for (k, a) in acc.iter_mut().enumerate() {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, v) in s.iter().enumerate() {
                let (c, sn) = tw[(i * k) % seg];
                re += v * c;
                im -= v * sn;
            }
            *a += re * re + im * im;
        }
        count += 1;
        start += seg / 2;
    }
    acc.iter().map(|a| a / count as f64).collect()
}

/// Sum of spectrum bins whose centre frequency lies in `[lo, hi)` Hz.
pub fn band_power(spectrum: &[f64], seg: usize, sample_rate: f64, lo: f64, hi: f64) -> f64 {
    spectrum
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let f = *k as f64 * sample_rate / seg as f64;
            f >= lo && f < hi
        })
        .map(|(_, p)| p)
        .sum()
}

/// Least-squares slope, in dB per octave, of the mean power density in
/// octave bands `[f, 2f)` from `lo` up to `hi` Hz, placed at the band's
/// geometric centre.
pub fn octave_slope_db(spectrum: &[f64], seg: usize, sample_rate: f64, lo: f64, hi: f64) -> f64 {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut f = lo;
    while f * 2.0 <= hi {
        let bins: Vec<f64> = spectrum
            .iter()
            .enumerate()
            .filter(|(k, _)| {
                let fk = *k as f64 * sample_rate / seg as f64;
                fk >= f && fk < 2.0 * f
            })
            .map(|(_, p)| *p)
            .collect();
        if !bins.is_empty() {
            let density = bins.iter().sum::<f64>() / bins.len() as f64;
            xs.push((f * 2f64.sqrt()).log2());
            ys.push(10.0 * density.log10());
        }
        f *= 2.0;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

pub mod cases;
