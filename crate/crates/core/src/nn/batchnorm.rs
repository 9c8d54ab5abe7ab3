//! Per-channel batch normalization over the `(batch, time)` axes.
//!
//! Three modes:
//!
//! - `Train`: normalize by the batch mean and biased variance; the caller
//!   folds the batch statistics into the running estimates (unbiased
//!   variance) with [`RunningStats::update`].
//! - `Frozen`: normalize by the running estimates.
//! - `Adaptive`: normalize by statistics of the batch being evaluated and
//!   persist nothing. `adaptation_weight < 1` blends the batch statistics
//!   with the running ones; `1.0` replaces them outright.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::Tensor;
use crate::{Error, Result};

pub const BN_EPSILON: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BnMode {
    Train,
    Frozen,
    Adaptive,
}

impl BnMode {
    pub fn uses_batch_stats(self) -> bool {
        !matches!(self, BnMode::Frozen)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnConfig {
    pub mode: BnMode,
    pub momentum: f64,
    pub epsilon: f64,
    /// Weight of the batch statistics in adaptive mode, in `[0, 1]`.
    pub adaptation_weight: f64,
}

impl BnConfig {
    pub fn new(mode: BnMode) -> Self {
        Self { mode, momentum: BN_MOMENTUM, epsilon: BN_EPSILON, adaptation_weight: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunningStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl RunningStats {
    pub fn new(channels: usize) -> Self {
        Self { mean: vec![0.0; channels], var: vec![1.0; channels] }
    }

    pub fn channels(&self) -> usize {
        self.mean.len()
    }

    /// Momentum update from a train-mode forward. Other modes leave the
    /// statistics untouched.
    pub fn update(&mut self, cache: &BnCache, momentum: f64) {
        if cache.mode != BnMode::Train {
            return;
        }
        let m = cache.count as f64;
        let unbias = m / (m - 1.0);
        for c in 0..self.mean.len() {
            self.mean[c] = (1.0 - momentum) * self.mean[c] + momentum * cache.batch_mean[c];
            self.var[c] = (1.0 - momentum) * self.var[c] + momentum * cache.batch_var[c] * unbias;
        }
    }
}

/// Values saved by the forward pass for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct BnCache {
    pub mode: BnMode,
    /// Pre-affine normalized activations.
    pub normalized: Tensor,
    pub inv_std: Vec<f64>,
    pub batch_mean: Vec<f64>,
    pub batch_var: Vec<f64>,
    /// Mean actually subtracted.
    pub used_mean: Vec<f64>,
    /// Values per channel, `N * T`.
    pub count: usize,
    /// Share of the batch statistics in the statistics actually used.
    pub batch_weight: f64,
}

pub fn batchnorm_forward(
    input: &Tensor,
    gamma: &[f64],
    beta: &[f64],
    running: &RunningStats,
    config: &BnConfig,
) -> Result<(Tensor, BnCache)> {
    let (n, c, t) = input.dims3()?;
    if gamma.len() != c || beta.len() != c || running.channels() != c {
        return Err(Error::shape(format!(
            "batchnorm over {c} channels given {} / {} / {} parameters",
            gamma.len(),
            beta.len(),
            running.channels()
        )));
    }
    let count = n * t;
    let x = input.data();
    let uses_batch = config.mode.uses_batch_stats();
    if uses_batch && count < 2 {
        return Err(Error::DegenerateBatch { values: count });
    }
    let mut batch_mean = vec![0.0; c];
    let mut batch_var = vec![0.0; c];
    if uses_batch {
        for ch in 0..c {
            let mut sum = 0.0;
            for b in 0..n {
                sum += x[(b * c + ch) * t..][..t].iter().sum::<f64>();
            }
            let mean = sum / count as f64;
            let mut sq = 0.0;
            for b in 0..n {
                sq += x[(b * c + ch) * t..][..t].iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
            }
            batch_mean[ch] = mean;
            batch_var[ch] = sq / count as f64;
        }
    }
    let batch_weight = match config.mode {
        BnMode::Train => 1.0,
        BnMode::Frozen => 0.0,
        BnMode::Adaptive => config.adaptation_weight.clamp(0.0, 1.0),
    };
    let mut inv_std = vec![0.0; c];
    let mut used_mean = vec![0.0; c];
    for ch in 0..c {
        let mean = batch_weight * batch_mean[ch] + (1.0 - batch_weight) * running.mean[ch];
        let var = batch_weight * batch_var[ch] + (1.0 - batch_weight) * running.var[ch];
        used_mean[ch] = mean;
        inv_std[ch] = 1.0 / libm::sqrt(var + config.epsilon);
    }
    let mut normalized = vec![0.0; x.len()];
    let mut out = vec![0.0; x.len()];
    for b in 0..n {
        for ch in 0..c {
            let base = (b * c + ch) * t;
            for i in base..base + t {
                let xh = (x[i] - used_mean[ch]) * inv_std[ch];
                normalized[i] = xh;
                out[i] = gamma[ch] * xh + beta[ch];
            }
        }
    }
    let shape = input.shape().to_vec();
    let cache = BnCache {
        mode: config.mode,
        normalized: Tensor::new(shape.clone(), normalized)?,
        inv_std,
        batch_mean,
        batch_var,
        used_mean,
        count,
        batch_weight,
    };
    Ok((Tensor::new(shape, out)?, cache))
}

/// Returns `(grad_input, grad_gamma, grad_beta)`.
///
/// With `g = gamma * dy`, inverse standard deviation `s`, batch weight `w`
/// and `m = N * T`, the input gradient per channel is
/// `s (g - w/m sum(g) - w/m sum(g xhat) (xhat + s (mean_used - mean_batch)))`.
/// Frozen mode (`w = 0`) reduces to `s g`.
pub fn batchnorm_backward(
    cache: &BnCache,
    gamma: &[f64],
    grad_output: &Tensor,
) -> Result<(Tensor, Vec<f64>, Vec<f64>)> {
    let (n, c, t) = cache.normalized.dims3()?;
    if grad_output.shape() != cache.normalized.shape() {
        return Err(Error::shape("batchnorm output gradient shape mismatch"));
    }
    let dy = grad_output.data();
    let xh = cache.normalized.data();
    let mut d_gamma = vec![0.0; c];
    let mut d_beta = vec![0.0; c];
    let mut dx = vec![0.0; dy.len()];
    let w = cache.batch_weight;
    let m = cache.count as f64;
    for ch in 0..c {
        let s = cache.inv_std[ch];
        let g = gamma[ch];
        let mut sum_dy = 0.0;
        let mut sum_dy_xh = 0.0;
        for b in 0..n {
            let base = (b * c + ch) * t;
            for i in base..base + t {
                sum_dy += dy[i];
                sum_dy_xh += dy[i] * xh[i];
            }
        }
        d_gamma[ch] = sum_dy_xh;
        d_beta[ch] = sum_dy;
        let sum_g = g * sum_dy;
        let sum_g_xh = g * sum_dy_xh;
        let offset = s * (cache.used_mean[ch] - cache.batch_mean[ch]);
        for b in 0..n {
            let base = (b * c + ch) * t;
            for i in base..base + t {
                dx[i] = s * (g * dy[i] - w / m * sum_g - w / m * sum_g_xh * (xh[i] + offset));
            }
        }
    }
    Ok((Tensor::new(cache.normalized.shape().to_vec(), dx)?, d_gamma, d_beta))
}

/// Owned batch-norm layer state: affine parameters, running statistics and
/// a mode flag.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormState {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running: RunningStats,
    pub config: BnConfig,
}

impl BatchNormState {
    pub fn new(channels: usize, mode: BnMode) -> Self {
        Self {
            gamma: vec![1.0; channels],
            beta: vec![0.0; channels],
            running: RunningStats::new(channels),
            config: BnConfig::new(mode),
        }
    }

    pub fn set_mode(&mut self, mode: BnMode) {
        self.config.mode = mode;
    }

    /// Forward in the configured mode; train mode also updates the running
    /// statistics.
    pub fn forward(&mut self, input: &Tensor) -> Result<(Tensor, BnCache)> {
        let (out, cache) = batchnorm_forward(input, &self.gamma, &self.beta, &self.running, &self.config)?;
        self.running.update(&cache, self.config.momentum);
        Ok((out, cache))
    }
}
