//! Plain SGD with step learning-rate decay, per-clip noise injection,
//! best-validation checkpoint selection, and a finite-difference gradient
//! check.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};

use crate::experiments::{evaluate_params, LabeledDataset, Split};
use crate::models::{Checkpoint, ForwardMode, FrontEnd, LayerSpec, ModelSpec, Network, ParamKind, Parameters, TrainingMetadata};
use crate::nn::{softmax_cross_entropy, BnMode, Tensor, BN_MOMENTUM};
use crate::rng::{stream, substream, Stream};
use crate::signal::{mix_at_snr, sample_noise_chunk, signal_power, AudioClip, NoiseKind, NoiseProfile, SnrDb};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub initial_lr: f64,
    pub decay_factor: f64,
    pub decay_every: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Inclusive SNR range for training-time injection.
    pub train_snr_range: (SnrDb, SnrDb),
    /// Training noise pool; empty trains on clean clips.
    pub noise_profiles: Vec<NoiseProfile>,
    /// Fixed validation SNR; `None` validates on clean clips.
    pub validation_snr: Option<SnrDb>,
    /// Validation noise pool; empty falls back to `noise_profiles`.
    pub validation_profiles: Vec<NoiseProfile>,
    /// Replaces every spatial-dropout rate in the model when set.
    pub dropout: Option<f64>,
    pub bn_momentum: f64,
}

/// Desk-scale batch size.
pub const DESK_BATCH_SIZE: usize = 8;
/// Full-scale batch size.
pub const FULL_BATCH_SIZE: usize = 64;

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 150,
            initial_lr: 0.1,
            decay_factor: 0.75,
            decay_every: 10,
            batch_size: FULL_BATCH_SIZE,
            seed: 0,
            train_snr_range: (SnrDb::new(-5.0).unwrap(), SnrDb::new(10.0).unwrap()),
            noise_profiles: Vec::new(),
            validation_snr: Some(SnrDb::new(0.0).unwrap()),
            validation_profiles: Vec::new(),
            dropout: Some(0.1),
            bn_momentum: BN_MOMENTUM,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("epochs must be at least 1"));
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return Err(Error::config("decay factor must lie in (0, 1]"));
        }
        if self.decay_every == 0 {
            return Err(Error::config("decay interval must be at least 1 epoch"));
        }
        if self.batch_size < 2 {
            return Err(Error::config("batch size must be at least 2"));
        }
        if !(self.initial_lr.is_finite() && self.initial_lr >= 0.0) {
            return Err(Error::config("learning rate must be finite and non-negative"));
        }
        if self.train_snr_range.0.db() > self.train_snr_range.1.db() {
            return Err(Error::config("training SNR range is reversed"));
        }
        if let Some(r) = self.dropout {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::config("dropout rate must lie in [0, 1)"));
            }
        }
        Ok(())
    }

    fn validation_pool(&self) -> &[NoiseProfile] {
        if self.validation_profiles.is_empty() {
            &self.noise_profiles
        } else {
            &self.validation_profiles
        }
    }
}

/// `initial_lr * decay_factor^floor(epoch / decay_every)`, rounded to 15
/// significant digits so decimal schedules come out as their decimal
/// values (0.1 * 0.75 is 0.075, not 0.07500000000000001).
pub fn lr_schedule(epoch: usize, config: &TrainConfig) -> f64 {
    let steps = (epoch / config.decay_every) as f64;
    round_significant(config.initial_lr * libm::pow(config.decay_factor, steps), 15)
}

fn round_significant(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let e = libm::floor(libm::log10(libm::fabs(x))) as i32;
    let shift = digits - 1 - e;
    if shift > 0 {
        let scale = libm::pow(10.0, shift as f64);
        libm::round(x * scale) / scale
    } else {
        let scale = libm::pow(10.0, -shift as f64);
        libm::round(x / scale) * scale
    }
}

/// `p <- p - lr * g`.
pub fn sgd_step(params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::shape(format!("{} parameters, {} gradients", params.len(), grads.len())));
    }
    for (p, g) in params.iter_mut().zip(grads) {
        *p -= lr * g;
    }
    Ok(())
}

/// Copy of `spec` with every spatial-dropout rate set to `rate`.
pub fn with_dropout(spec: &ModelSpec, rate: f64) -> ModelSpec {
    fn rewrite(layers: &mut [LayerSpec], rate: f64) {
        for l in layers {
            match l {
                LayerSpec::SpatialDropout { rate: r } => *r = rate,
                LayerSpec::Residual { body, shortcut } => {
                    rewrite(body, rate);
                    rewrite(shortcut, rate);
                }
                _ => {}
            }
        }
    }
    let mut s = spec.clone();
    rewrite(&mut s.layers, rate);
    s
}

/// Mixes `clip` with a chunk from a uniformly chosen profile at `snr`.
/// Silent clips have no defined SNR and pass through unchanged. Returns the
/// noise kind used, if any.
pub fn inject_noise<R: RngCore>(
    clip: &AudioClip,
    profiles: &[NoiseProfile],
    snr: SnrDb,
    rng: &mut R,
) -> Result<(AudioClip, Option<NoiseKind>)> {
    if profiles.is_empty() {
        return Ok((clip.clone(), None));
    }
    let profile = &profiles[rng.random_range(0..profiles.len())];
    let noise = sample_noise_chunk(profile, clip.len(), rng)?;
    if signal_power(clip)? == 0.0 {
        return Ok((clip.clone(), Some(profile.kind)));
    }
    let mixed = mix_at_snr(clip, &noise, snr)?;
    Ok((mixed.clip, Some(profile.kind)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLogRow {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_accuracy: f64,
    /// Noise chunks drawn this epoch per kind: white, pink, file-backed.
    pub noise_chunks: [usize; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the highest validation accuracy.
    pub checkpoint: Checkpoint,
    pub log: Vec<TrainLogRow>,
    /// Parameters after the last epoch.
    pub final_params: Parameters,
}

fn kind_index(kind: NoiseKind) -> usize {
    match kind {
        NoiseKind::White => 0,
        NoiseKind::Pink => 1,
        NoiseKind::FileBacked => 2,
    }
}

/// Initial parameters for `spec` under `seed`; shared by every run with the
/// same seed regardless of noise pools.
pub fn initial_parameters(net: &Network, seed: u64) -> Parameters {
    net.init(&mut stream(seed, Stream::WeightInit))
}

pub fn train(spec: &ModelSpec, dataset: &LabeledDataset, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let spec = match config.dropout {
        Some(rate) => with_dropout(spec, rate),
        None => spec.clone(),
    };
    let train_clips = dataset.split(Split::Train);
    let val_clips = dataset.split(Split::Validation);
    if train_clips.is_empty() {
        return Err(Error::Dataset("training split is empty".into()));
    }
    if val_clips.is_empty() {
        return Err(Error::Dataset("validation split is empty".into()));
    }
    let labels: Vec<usize> = train_clips
        .iter()
        .map(|c| c.label.ok_or_else(|| Error::Dataset("unlabeled training clip".into())))
        .collect::<Result<_>>()?;

    let net = Network::new(&spec)?;
    let front = FrontEnd::new(&spec.input)?;
    let mut params = initial_parameters(&net, config.seed);
    let (lo, hi) = (config.train_snr_range.0.db(), config.train_snr_range.1.db());

    let mut best: Option<(f64, usize, Parameters)> = None;
    let mut log = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..train_clips.len()).collect();

    for epoch in 0..config.epochs {
        let lr = lr_schedule(epoch, config);
        let e = epoch as u64;
        order.sort_unstable();
        order.shuffle(&mut substream(config.seed, Stream::Shuffle, e));
        let mut noise_rng = substream(config.seed, Stream::NoiseInjection, e);
        let mut dropout_rng = substream(config.seed, Stream::Dropout, e);
        let mut chunks = [0usize; 3];
        let mut loss_sum = 0.0;
        let mut seen = 0usize;

        let mut batches: Vec<&[usize]> = order.chunks(config.batch_size).collect();
        if batches.len() > 1 && batches.last().is_some_and(|b| b.len() < 2) {
            batches.pop();
        }
        for (b, idx) in batches.into_iter().enumerate() {
            let mut clips = Vec::with_capacity(idx.len());
            for &i in idx {
                let snr = SnrDb::new(if hi > lo { noise_rng.random_range(lo..=hi) } else { lo })?;
                let (clip, kind) = inject_noise(train_clips[i], &config.noise_profiles, snr, &mut noise_rng)?;
                if let Some(k) = kind {
                    chunks[kind_index(k)] += 1;
                }
                clips.push(clip);
            }
            let x = front.batch(clips.iter())?;
            let y: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
            let diverged = || Error::Divergence { epoch, batch: b };
            let (logits, tape) = net.forward(&params, &x, ForwardMode::Train, &mut dropout_rng)?;
            if !logits.is_finite() {
                return Err(diverged());
            }
            let ce = softmax_cross_entropy(&logits, &y)?;
            if !ce.loss.is_finite() {
                return Err(diverged());
            }
            let grads = net.backward(&params, &tape, &ce.grad_logits)?;
            if grads.params.iter().any(|g| !g.is_finite()) {
                return Err(diverged());
            }
            sgd_step(&mut params.values, &grads.params, lr)?;
            net.update_running_stats(&mut params, &tape, config.bn_momentum);
            loss_sum += ce.loss * idx.len() as f64;
            seen += idx.len();
        }

        let val = evaluate_params(
            &net,
            &front,
            &params,
            &val_clips,
            config.validation_snr,
            config.validation_pool(),
            BnMode::Frozen,
            crate::experiments::DEFAULT_EVAL_BATCH,
            config.seed,
            Stream::Validation,
        )?;
        let acc = val.accuracy();
        if best.as_ref().is_none_or(|(a, _, _)| acc > *a) {
            best = Some((acc, epoch, params.clone()));
        }
        log.push(TrainLogRow { epoch, lr, train_loss: loss_sum / seen as f64, val_accuracy: acc, noise_chunks: chunks });
    }

    let (acc, epoch, best_params) = best.expect("at least one epoch ran");
    let metadata = TrainingMetadata { epoch: epoch as u32, validation_accuracy: acc, seed: config.seed };
    Ok(TrainOutcome { checkpoint: Checkpoint::new(spec, best_params, metadata)?, log, final_params: params })
}

/// Per-kind outcome of a gradient check.
#[derive(Debug, Clone, PartialEq)]
pub struct KindError {
    pub kind: ParamKind,
    pub checked: usize,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    /// Parameters whose perturbation crossed a ReLU or |x| kink.
    pub skipped: usize,
    pub per_kind: Vec<KindError>,
    /// Max relative error of the input gradient over sampled inputs.
    pub input_rel_error: f64,
}

pub const GRADIENT_CHECK_STEP: f64 = 1e-5;
/// Denominator floor of the relative error, so entries whose true gradient
/// is at rounding level do not dominate.
pub const GRADIENT_CHECK_FLOOR: f64 = 1e-6;
pub const GRADIENT_CHECK_SAMPLES: usize = 240;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    libm::fabs(analytic - numeric) / analytic.abs().max(numeric.abs()).max(GRADIENT_CHECK_FLOOR)
}

/// Compares the full-model analytic gradient of the mean cross-entropy in
/// train mode with central finite differences on a stratified sample of at
/// least [`GRADIENT_CHECK_SAMPLES`] parameters, or all when fewer exist.
pub fn gradient_check(spec: &ModelSpec, batch: &Tensor, labels: &[usize], seed: u64) -> Result<GradientCheckReport> {
    let net = Network::new(spec)?;
    let mut params = initial_parameters(&net, seed);
    // Perturb away from the gamma = 1, beta = 0 initialisation so every
    // batch-norm term is exercised.
    let mut jitter = stream(seed, Stream::Generator);
    for s in net.slices() {
        if matches!(s.kind, ParamKind::BnGamma | ParamKind::BnBeta) {
            for v in &mut params.values[s.offset..s.offset + s.len] {
                *v += jitter.random_range(-0.3..0.3);
            }
        }
    }
    const DROPOUT_SEED: u64 = 0x5eed;
    let loss_at = |p: &Parameters, x: &Tensor| -> Result<(f64, Vec<bool>)> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(DROPOUT_SEED);
        let (logits, tape) = net.forward(p, x, ForwardMode::Train, &mut rng)?;
        Ok((softmax_cross_entropy(&logits, labels)?.loss, tape.kink_signature()))
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(DROPOUT_SEED);
    let (logits, tape) = net.forward(&params, batch, ForwardMode::Train, &mut rng)?;
    let base_sig = tape.kink_signature();
    let ce = softmax_cross_entropy(&logits, labels)?;
    let grads = net.backward(&params, &tape, &ce.grad_logits)?;

    let mut kinds: Vec<ParamKind> = Vec::new();
    for s in net.slices() {
        if !kinds.contains(&s.kind) {
            kinds.push(s.kind);
        }
    }
    let per_kind_target = GRADIENT_CHECK_SAMPLES.div_ceil(kinds.len().max(1));
    let mut pick = stream(seed, Stream::Evaluation);
    let h = GRADIENT_CHECK_STEP;
    let mut per_kind = Vec::new();
    let (mut checked, mut skipped, mut max_err) = (0, 0, 0.0f64);
    for &kind in &kinds {
        let mut idx: Vec<usize> = net
            .slices()
            .iter()
            .filter(|s| s.kind == kind)
            .flat_map(|s| s.offset..s.offset + s.len)
            .collect();
        idx.shuffle(&mut pick);
        let mut k = KindError { kind, checked: 0, max_rel_error: 0.0 };
        for &i in &idx {
            if k.checked >= per_kind_target {
                break;
            }
            let orig = params.values[i];
            params.values[i] = orig + h;
            let (lp, sp) = loss_at(&params, batch)?;
            params.values[i] = orig - h;
            let (lm, sm) = loss_at(&params, batch)?;
            params.values[i] = orig;
            if sp != base_sig || sm != base_sig {
                skipped += 1;
                continue;
            }
            let err = relative_error(grads.params[i], (lp - lm) / (2.0 * h));
            k.max_rel_error = k.max_rel_error.max(err);
            k.checked += 1;
        }
        checked += k.checked;
        max_err = max_err.max(k.max_rel_error);
        per_kind.push(k);
    }

    let mut input_err = 0.0f64;
    let mut x = batch.clone();
    let n_in = x.len();
    for _ in 0..n_in.min(32) {
        let i = pick.random_range(0..n_in);
        let orig = x.data()[i];
        x.data_mut()[i] = orig + h;
        let (lp, sp) = loss_at(&params, &x)?;
        x.data_mut()[i] = orig - h;
        let (lm, sm) = loss_at(&params, &x)?;
        x.data_mut()[i] = orig;
        if sp != base_sig || sm != base_sig {
            continue;
        }
        input_err = input_err.max(relative_error(grads.input.data()[i], (lp - lm) / (2.0 * h)));
    }

    Ok(GradientCheckReport { max_rel_error: max_err, checked, skipped, per_kind, input_rel_error: input_err })
}

/// Formats a report as one line per parameter kind.
pub fn format_gradient_report(report: &GradientCheckReport) -> String {
    let mut s = String::new();
    for k in &report.per_kind {
        s.push_str(&format!("{:<10} checked {:>4} max rel error {:.3e}\n", k.kind.as_str(), k.checked, k.max_rel_error));
    }
    s.push_str(&format!(
        "input      max rel error {:.3e}; skipped {} kink crossings\n",
        report.input_rel_error, report.skipped
    ));
    s
}
