//! Labeled datasets, speaker-disjoint splits, noisy evaluation, and the
//! known-noise and unknown-noise protocols.

mod micro;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use sha2::{Digest, Sha256};

pub use micro::{make_micro_dataset, make_micro_dataset_with, micro_noise_profile, micro_templates, MicroConfig};

use crate::models::{Checkpoint, ForwardMode, FrontEnd, ModelSpec, Network, Parameters};
use crate::nn::BnMode;
use crate::rng::{substream, Stream};
use crate::signal::{AudioClip, NoiseKind, NoiseProfile, SnrDb};
use crate::training::{inject_noise, train, TrainConfig, TrainLogRow};
use crate::{Error, Result, NUM_CLASSES};

/// Evaluation batch size, recorded in every report row.
pub const DEFAULT_EVAL_BATCH: usize = 128;

/// Names of the ten keyword classes, in class order; class 10 is unknown and
/// class 11 silence.
pub const KEYWORDS: [&str; 10] = ["yes", "no", "up", "down", "left", "right", "on", "off", "stop", "go"];
pub const UNKNOWN_CLASS: usize = 10;
pub const SILENCE_CLASS: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

/// Labeled clips with a split assignment and a source name per clip.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledDataset {
    pub clips: Vec<AudioClip>,
    /// File name (or synthetic equivalent) the speaker id is parsed from.
    pub names: Vec<String>,
    pub splits: Vec<Split>,
}

impl LabeledDataset {
    /// Every clip must carry a label below 12; all start in the training split.
    pub fn new(clips: Vec<AudioClip>, names: Vec<String>) -> Result<Self> {
        if clips.len() != names.len() {
            return Err(Error::Dataset(format!("{} clips but {} names", clips.len(), names.len())));
        }
        for c in &clips {
            match c.label {
                Some(l) if l < NUM_CLASSES => {}
                Some(l) => return Err(Error::Label { label: l, classes: NUM_CLASSES }),
                None => return Err(Error::Dataset("unlabeled clip".into())),
            }
        }
        let splits = vec![Split::Train; clips.len()];
        Ok(Self { clips, names, splits })
    }

    pub fn len(&self) -> usize {
        self.clips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }

    pub fn split(&self, split: Split) -> Vec<&AudioClip> {
        self.clips.iter().zip(&self.splits).filter(|(_, s)| **s == split).map(|(c, _)| c).collect()
    }

    pub fn split_len(&self, split: Split) -> usize {
        self.splits.iter().filter(|s| **s == split).count()
    }

    pub fn class_counts(&self) -> [usize; NUM_CLASSES] {
        let mut counts = [0; NUM_CLASSES];
        for c in &self.clips {
            if let Some(l) = c.label {
                counts[l] += 1;
            }
        }
        counts
    }
}

/// Speaker id from a `<speaker>_nohash_<n>.wav` file name, ignoring any
/// directory prefix.
pub fn speaker_id(name: &str) -> Option<&str> {
    let base = name.rsplit(['/', '\\']).next().unwrap_or(name);
    let (speaker, _) = base.split_once("_nohash_")?;
    (!speaker.is_empty()).then_some(speaker)
}

/// Position of `key` in `[0, 1)` under the seeded hash.
pub fn hash_fraction(key: &str, seed: u64) -> f64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(key.as_bytes());
    let d = h.finalize();
    let mut b = [0u8; 8];
    b.copy_from_slice(&d[..8]);
    (u64::from_le_bytes(b) >> 11) as f64 / (1u64 << 53) as f64
}

pub fn split_for_fraction(u: f64) -> Split {
    if u < 0.8 {
        Split::Train
    } else if u < 0.9 {
        Split::Validation
    } else {
        Split::Test
    }
}

/// Assigns splits by a seeded hash of each clip's speaker. Returns the
/// names that had no parsable speaker id; those fall back to hashing the
/// full name.
pub fn split_dataset(mut dataset: LabeledDataset, seed: u64) -> Result<(LabeledDataset, Vec<String>)> {
    if dataset.is_empty() {
        return Err(Error::Dataset("cannot split an empty dataset".into()));
    }
    let mut unparsed = Vec::new();
    for (name, split) in dataset.names.iter().zip(dataset.splits.iter_mut()) {
        let key = match speaker_id(name) {
            Some(s) => s,
            None => {
                unparsed.push(name.clone());
                name.as_str()
            }
        };
        *split = split_for_fraction(hash_fraction(key, seed));
    }
    Ok((dataset, unparsed))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    /// `confusion[true][predicted]`.
    pub confusion: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl Evaluation {
    pub fn total(&self) -> u64 {
        self.confusion.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..NUM_CLASSES).map(|i| self.confusion[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        let t = self.total();
        if t == 0 {
            0.0
        } else {
            self.correct() as f64 / t as f64
        }
    }
}

fn clip_key(clip: &AudioClip) -> u64 {
    let mut h = Sha256::new();
    for s in &clip.samples {
        h.update(s.to_bits().to_le_bytes());
    }
    let d = h.finalize();
    let mut b = [0u8; 8];
    b.copy_from_slice(&d[..8]);
    u64::from_le_bytes(b)
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Mixes every clip with fresh noise at `snr` (clean when `None`), runs
/// batched inference in `bn_mode`, and tallies a confusion matrix.
///
/// The noise for a clip is drawn from a stream keyed by `(seed, clip
/// content)`, so results do not depend on clip order in frozen mode.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_params(
    net: &Network,
    front: &FrontEnd,
    params: &Parameters,
    clips: &[&AudioClip],
    snr: Option<SnrDb>,
    profiles: &[NoiseProfile],
    bn_mode: BnMode,
    eval_batch_size: usize,
    seed: u64,
    noise_stream: Stream,
) -> Result<Evaluation> {
    let mode = match bn_mode {
        BnMode::Frozen => ForwardMode::FrozenEval,
        BnMode::Adaptive => ForwardMode::AdaptiveEval,
        BnMode::Train => return Err(Error::config("evaluation runs in frozen or adaptive mode")),
    };
    if eval_batch_size == 0 {
        return Err(Error::config("evaluation batch size must be positive"));
    }
    if snr.is_some() && profiles.is_empty() {
        return Err(Error::config("noisy evaluation needs at least one noise profile"));
    }
    let mut confusion = [[0u64; NUM_CLASSES]; NUM_CLASSES];
    let mut unused = substream(seed, Stream::Dropout, u64::MAX);
    for chunk in clips.chunks(eval_batch_size) {
        let mut batch = Vec::with_capacity(chunk.len());
        for clip in chunk {
            batch.push(match snr {
                Some(snr) => {
                    let mut rng = substream(seed, noise_stream, clip_key(clip));
                    inject_noise(clip, profiles, snr, &mut rng)?.0
                }
                None => (*clip).clone(),
            });
        }
        let x = front.batch(batch.iter())?;
        let (logits, _) = net.forward(params, &x, mode, &mut unused)?;
        for (clip, row) in chunk.iter().zip(logits.data().chunks_exact(NUM_CLASSES)) {
            let label = clip.label.ok_or_else(|| Error::Dataset("unlabeled evaluation clip".into()))?;
            confusion[label][argmax(row)] += 1;
        }
    }
    Ok(Evaluation { confusion })
}

/// [`evaluate_params`] for a checkpoint on its own front-end.
pub fn evaluate(
    checkpoint: &Checkpoint,
    clips: &[&AudioClip],
    snr: Option<SnrDb>,
    profiles: &[NoiseProfile],
    bn_mode: BnMode,
    eval_batch_size: usize,
    seed: u64,
) -> Result<Evaluation> {
    let net = checkpoint.network()?;
    let front = FrontEnd::new(&checkpoint.spec.input)?;
    evaluate_params(&net, &front, &checkpoint.params, clips, snr, profiles, bn_mode, eval_batch_size, seed, Stream::Evaluation)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Condition {
    Known,
    Unknown,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Known => "known",
            Condition::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "known" => Ok(Condition::Known),
            "unknown" => Ok(Condition::Unknown),
            _ => Err(Error::config(format!("unknown condition `{s}` (expected known or unknown)"))),
        }
    }
}

pub fn bn_mode_name(mode: BnMode) -> &'static str {
    match mode {
        BnMode::Train => "train",
        BnMode::Frozen => "frozen",
        BnMode::Adaptive => "adaptive",
    }
}

pub fn parse_bn_mode(s: &str) -> Result<BnMode> {
    match s {
        "frozen" => Ok(BnMode::Frozen),
        "adaptive" => Ok(BnMode::Adaptive),
        _ => Err(Error::config(format!("unknown batch-norm mode `{s}` (expected frozen or adaptive)"))),
    }
}

/// The three noise pools of the protocols.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePools {
    pub white: NoiseProfile,
    pub pink: NoiseProfile,
    /// Miscellaneous recordings; file-backed.
    pub misc: NoiseProfile,
}

impl NoisePools {
    pub fn new(white: NoiseProfile, pink: NoiseProfile, misc: NoiseProfile) -> Result<Self> {
        if white.kind != NoiseKind::White || pink.kind != NoiseKind::Pink || misc.kind != NoiseKind::FileBacked {
            return Err(Error::config("noise pools must be white, pink and file-backed miscellaneous"));
        }
        Ok(Self { white, pink, misc })
    }

    /// Training and evaluation pools for a condition.
    pub fn for_condition(&self, condition: Condition) -> (Vec<NoiseProfile>, Vec<NoiseProfile>) {
        let all = vec![self.white.clone(), self.pink.clone(), self.misc.clone()];
        match condition {
            Condition::Known => (all.clone(), all),
            Condition::Unknown => (vec![self.white.clone(), self.pink.clone()], vec![self.misc.clone()]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub condition: Condition,
    pub model: ModelSpec,
    /// `None` entries evaluate on clean clips.
    pub test_snrs: Vec<Option<SnrDb>>,
    pub bn_modes: Vec<BnMode>,
    pub eval_batch_size: usize,
    pub seeds: Vec<u64>,
    /// Template for every seed; noise pools and seed are filled in per run.
    pub train: TrainConfig,
}

impl ExperimentConfig {
    pub fn default_snrs() -> Vec<Option<SnrDb>> {
        [-5.0, 0.0, 5.0, 10.0].iter().map(|&d| Some(SnrDb::new(d).unwrap())).collect()
    }

    pub fn new(condition: Condition, model: ModelSpec) -> Self {
        let bn_modes = match condition {
            Condition::Known => vec![BnMode::Frozen],
            Condition::Unknown => vec![BnMode::Frozen, BnMode::Adaptive],
        };
        Self {
            condition,
            model,
            test_snrs: Self::default_snrs(),
            bn_modes,
            eval_batch_size: DEFAULT_EVAL_BATCH,
            seeds: vec![0],
            train: TrainConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.test_snrs.is_empty() {
            return Err(Error::config("test SNR list is empty"));
        }
        if self.bn_modes.is_empty() || self.bn_modes.contains(&BnMode::Train) {
            return Err(Error::config("test batch-norm modes must be frozen and/or adaptive"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seed list is empty"));
        }
        if self.eval_batch_size == 0 {
            return Err(Error::config("evaluation batch size must be positive"));
        }
        self.model.validate()?;
        self.train.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub model: String,
    pub condition: Condition,
    /// `None` marks a clean evaluation.
    pub snr_db: Option<f64>,
    pub bn_mode: BnMode,
    pub seed: u64,
    pub eval_batch_size: usize,
    pub evaluation: Evaluation,
}

impl ReportRow {
    pub fn accuracy(&self) -> f64 {
        self.evaluation.accuracy()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
}

fn snr_order(s: Option<f64>) -> f64 {
    s.unwrap_or(f64::INFINITY)
}

impl EvalReport {
    /// Canonical order: seed, then SNR (clean last), then frozen before
    /// adaptive.
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            a.seed
                .cmp(&b.seed)
                .then(snr_order(a.snr_db).total_cmp(&snr_order(b.snr_db)))
                .then((a.bn_mode == BnMode::Adaptive).cmp(&(b.bn_mode == BnMode::Adaptive)))
                .then(a.condition.cmp(&b.condition))
                .then(a.model.cmp(&b.model))
        });
    }

    pub fn merge(reports: impl IntoIterator<Item = EvalReport>) -> Self {
        let mut r = EvalReport { rows: reports.into_iter().flat_map(|r| r.rows).collect() };
        r.sort();
        r
    }

    /// Mean accuracy over rows matching the filters.
    pub fn mean_accuracy(&self, condition: Condition, snr_db: Option<f64>, bn_mode: BnMode) -> Option<f64> {
        let accs: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.condition == condition && r.snr_db == snr_db && r.bn_mode == bn_mode)
            .map(|r| r.accuracy())
            .collect();
        (!accs.is_empty()).then(|| accs.iter().sum::<f64>() / accs.len() as f64)
    }
}

/// Training log and report for one seed of one protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    pub seed: u64,
    pub checkpoint: Checkpoint,
    pub log: Vec<TrainLogRow>,
    pub report: EvalReport,
}

/// Trains with the condition's training pool and evaluates on the test
/// split at every `(snr, bn_mode)` cell.
pub fn run_seed(config: &ExperimentConfig, dataset: &LabeledDataset, pools: &NoisePools, seed: u64) -> Result<SeedOutcome> {
    config.validate()?;
    let (train_pool, eval_pool) = pools.for_condition(config.condition);
    let mut tc = config.train.clone();
    tc.seed = seed;
    tc.noise_profiles = train_pool;
    tc.validation_profiles = eval_pool.clone();
    let outcome = train(&config.model, dataset, &tc)?;
    let report = evaluate_checkpoint(config, &outcome.checkpoint, dataset, &eval_pool, seed)?;
    Ok(SeedOutcome { seed, checkpoint: outcome.checkpoint, log: outcome.log, report })
}

/// Evaluates an existing checkpoint over the SNR x batch-norm grid.
pub fn evaluate_checkpoint(
    config: &ExperimentConfig,
    checkpoint: &Checkpoint,
    dataset: &LabeledDataset,
    profiles: &[NoiseProfile],
    seed: u64,
) -> Result<EvalReport> {
    let test = dataset.split(Split::Test);
    if test.is_empty() {
        return Err(Error::Dataset("test split is empty".into()));
    }
    let mut rows = Vec::new();
    for &snr in &config.test_snrs {
        for &mode in &config.bn_modes {
            let evaluation = evaluate(checkpoint, &test, snr, profiles, mode, config.eval_batch_size, seed)?;
            rows.push(ReportRow {
                model: checkpoint.spec.id.clone(),
                condition: config.condition,
                snr_db: snr.map(|s| s.db()),
                bn_mode: mode,
                seed,
                eval_batch_size: config.eval_batch_size,
                evaluation,
            });
        }
    }
    let mut r = EvalReport { rows };
    r.sort();
    Ok(r)
}

fn run_protocol(config: &ExperimentConfig, dataset: &LabeledDataset, pools: &NoisePools) -> Result<(EvalReport, Vec<SeedOutcome>)> {
    let outcomes: Vec<SeedOutcome> =
        config.seeds.iter().map(|&s| run_seed(config, dataset, pools, s)).collect::<Result<_>>()?;
    let report = EvalReport::merge(outcomes.iter().map(|o| o.report.clone()));
    Ok((report, outcomes))
}

/// Trains and tests with white, pink and miscellaneous noise.
pub fn run_known_noise_experiment(
    config: &ExperimentConfig,
    dataset: &LabeledDataset,
    pools: &NoisePools,
) -> Result<(EvalReport, Vec<SeedOutcome>)> {
    if config.condition != Condition::Known {
        return Err(Error::config("known-noise protocol given an unknown-noise config"));
    }
    run_protocol(config, dataset, pools)
}

/// Trains with white and pink noise, validates and tests with
/// miscellaneous noise.
pub fn run_unknown_noise_experiment(
    config: &ExperimentConfig,
    dataset: &LabeledDataset,
    pools: &NoisePools,
) -> Result<(EvalReport, Vec<SeedOutcome>)> {
    if config.condition != Condition::Unknown {
        return Err(Error::config("unknown-noise protocol given a known-noise config"));
    }
    run_protocol(config, dataset, pools)
}
