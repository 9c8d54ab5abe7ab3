//! The `kws` command line.
//!
//! Every value flag may also come from `--config FILE` (see [`crate::config`]).
//! Exit codes: 0 success, 2 usage or input error, 3 runtime or numeric error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{ArgAction, Args, Parser, Subcommand};
use kws_core::experiments::{
    bn_mode_name, evaluate_checkpoint, make_micro_dataset, micro_noise_profile, parse_bn_mode, run_seed, split_dataset,
    Condition, EvalReport, ExperimentConfig, LabeledDataset, NoisePools, SeedOutcome, Split,
};
use kws_core::models::{count_macs, count_params, layer_costs, ModelId};
use kws_core::nn::BnMode;
use kws_core::rng::{stream, Stream};
use kws_core::signal::{component_snr_db, mix_at_snr, sample_noise_chunk, NoiseProfile, SnrDb};
use kws_core::training::{train, TrainConfig, DESK_BATCH_SIZE, FULL_BATCH_SIZE};

use crate::ckpt::{read_checkpoint, write_checkpoint};
use crate::config::{parse_list, parse_value, raw, ConfigFile};
use crate::corpus::{load_noise_dir, load_speech_commands};
use crate::error::{KwsError, Result};
use crate::fsutil::atomic_write;
use crate::report::{confusion_csv, report_csv, snr_field, train_log_csv};
use crate::wav::{read_wav, write_wav};

pub const DATA_ENV: &str = "KWS_DATA_DIR";
pub const NOISE_ENV: &str = "KWS_NOISE_DIR";

#[derive(Debug, Parser)]
#[command(name = "kws", version, about = "Keyword-spotting noise-robustness workbench")]
pub struct Cli {
    /// Settings file of `key = value` lines; flags override it
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Log more (-v info, -vv debug)
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mix a WAV with noise at an exact SNR
    Mix(MixArgs),
    /// Print parameter and MAC counts
    Count(CountArgs),
    /// Train a model and write a checkpoint plus CSV log
    Train(TrainArgs),
    /// Evaluate a checkpoint over an SNR x batch-norm grid
    Eval(EvalArgs),
    /// Train and evaluate one noise protocol for several seeds
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct MixArgs {
    /// Clean input WAV
    #[arg(long = "in", value_name = "WAV")]
    pub input: Option<String>,
    /// white, pink, or a directory of noise WAVs
    #[arg(long)]
    pub noise: Option<String>,
    /// Target SNR in dB
    #[arg(long, allow_hyphen_values = true)]
    pub snr: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long, value_name = "WAV")]
    pub out: Option<String>,
}

#[derive(Debug, Args)]
pub struct CountArgs {
    #[arg(long)]
    pub model: Option<String>,
    /// Also print the per-layer breakdown
    #[arg(long)]
    pub layers: bool,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Speech Commands root directory, or `micro` for the synthetic set
    #[arg(long)]
    pub data: Option<String>,
    /// Seed of the split hash and of the synthetic set
    #[arg(long)]
    pub data_seed: Option<String>,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[arg(long)]
    pub epochs: Option<String>,
    #[arg(long)]
    pub batch_size: Option<String>,
    /// Initial learning rate
    #[arg(long)]
    pub lr: Option<String>,
    /// Learning-rate decay factor
    #[arg(long)]
    pub decay: Option<String>,
    /// Epochs between decays
    #[arg(long)]
    pub decay_every: Option<String>,
    /// Lower edge of the training SNR range (dB)
    #[arg(long, allow_hyphen_values = true)]
    pub snr_min: Option<String>,
    /// Upper edge of the training SNR range (dB)
    #[arg(long, allow_hyphen_values = true)]
    pub snr_max: Option<String>,
    /// Validation SNR in dB, or `clean`
    #[arg(long, allow_hyphen_values = true)]
    pub val_snr: Option<String>,
    /// Spatial dropout rate
    #[arg(long)]
    pub dropout: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub model: Option<String>,
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma list of white, pink, micro or noise directories; clean if absent
    #[arg(long)]
    pub noise: Option<String>,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[arg(long)]
    pub seed: Option<String>,
    /// Checkpoint path
    #[arg(long)]
    pub out: Option<String>,
    /// Training-log CSV; defaults to the checkpoint path with a .csv extension
    #[arg(long)]
    pub log: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub ckpt: Option<String>,
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma list of white, pink, micro or noise directories
    #[arg(long)]
    pub noise: Option<String>,
    /// Comma list of SNRs in dB; `clean` evaluates without noise
    #[arg(long, allow_hyphen_values = true)]
    pub snr: Option<String>,
    /// Comma list of frozen, adaptive
    #[arg(long)]
    pub bn: Option<String>,
    #[arg(long)]
    pub eval_batch: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Condition label written to the report (known or unknown)
    #[arg(long)]
    pub condition: Option<String>,
    /// Report CSV; the confusion counts go next to it as NAME.confusion.csv
    #[arg(long)]
    pub report: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// known or unknown
    #[arg(long)]
    pub condition: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// Comma list of seeds
    #[arg(long)]
    pub seeds: Option<String>,
    #[command(flatten)]
    pub data: DataArgs,
    /// Miscellaneous-noise directory, or `micro`
    #[arg(long)]
    pub noise: Option<String>,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub snr: Option<String>,
    #[arg(long)]
    pub bn: Option<String>,
    #[arg(long)]
    pub eval_batch: Option<String>,
    /// Directory for the report, checkpoints and training logs
    #[arg(long)]
    pub out_dir: Option<String>,
    /// Seeds run in parallel
    #[arg(long)]
    pub jobs: Option<String>,
}

const MIX_KEYS: &[&str] = &["in", "noise", "snr", "seed", "out"];
const COUNT_KEYS: &[&str] = &["model"];
const DATA_KEYS: &[&str] = &["data", "data-seed"];
const SCHEDULE_KEYS: &[&str] =
    &["epochs", "batch-size", "lr", "decay", "decay-every", "snr-min", "snr-max", "val-snr", "dropout"];
const TRAIN_KEYS: &[&str] = &["model", "noise", "seed", "out", "log"];
const EVAL_KEYS: &[&str] = &["ckpt", "noise", "snr", "bn", "eval-batch", "seed", "condition", "report"];
const EXPERIMENT_KEYS: &[&str] =
    &["condition", "model", "seeds", "noise", "snr", "bn", "eval-batch", "out-dir", "jobs"];

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).format_target(false).try_init();
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let keys = |parts: &[&'static [&'static str]]| parts.concat();
    match &cli.command {
        Command::Mix(a) => {
            file.check_keys(MIX_KEYS)?;
            cmd_mix(a, &file)
        }
        Command::Count(a) => {
            file.check_keys(COUNT_KEYS)?;
            cmd_count(a, &file)
        }
        Command::Train(a) => {
            file.check_keys(&keys(&[TRAIN_KEYS, DATA_KEYS, SCHEDULE_KEYS]))?;
            cmd_train(a, &file)
        }
        Command::Eval(a) => {
            file.check_keys(&keys(&[EVAL_KEYS, DATA_KEYS]))?;
            cmd_eval(a, &file)
        }
        Command::Experiment(a) => {
            file.check_keys(&keys(&[EXPERIMENT_KEYS, DATA_KEYS, SCHEDULE_KEYS]))?;
            cmd_experiment(a, &file)
        }
    }
}

struct Settings<'a> {
    file: &'a ConfigFile,
}

impl Settings<'_> {
    fn get<T: FromStr>(&self, key: &str, flag: &Option<String>) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        raw(flag, self.file, key).map(|t| parse_value(&format!("--{key}"), t)).transpose()
    }

    fn or<T: FromStr>(&self, key: &str, flag: &Option<String>, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key, flag)?.unwrap_or(default))
    }

    fn required(&self, key: &str, flag: &Option<String>) -> Result<String> {
        raw(flag, self.file, key).map(str::to_string).ok_or_else(|| KwsError::usage(format!("missing --{key}")))
    }

    fn list<T: FromStr>(&self, key: &str, flag: &Option<String>) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        raw(flag, self.file, key).map(|t| parse_list(&format!("--{key}"), t)).transpose()
    }

    /// Flag, then file, then environment variable.
    fn with_env(&self, key: &str, flag: &Option<String>, env: &str) -> Option<String> {
        raw(flag, self.file, key).map(str::to_string).or_else(|| std::env::var(env).ok().filter(|v| !v.is_empty()))
    }
}

/// A test SNR: decibels, or `clean` / `inf` for no noise.
#[derive(Debug, Clone, Copy, PartialEq)]
struct SnrArg(Option<SnrDb>);

impl FromStr for SnrArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "clean" | "inf" | "+inf" => Ok(SnrArg(None)),
            _ => {
                let db: f64 = s.parse().map_err(|_| format!("expected dB or `clean`, got `{s}`"))?;
                SnrDb::new(db).map(|v| SnrArg(Some(v))).map_err(|e| e.to_string())
            }
        }
    }
}

struct BnArg(BnMode);

impl FromStr for BnArg {
    type Err = kws_core::Error;

    fn from_str(s: &str) -> std::result::Result<Self, kws_core::Error> {
        parse_bn_mode(s).map(BnArg)
    }
}

fn model_id(s: &str) -> Result<ModelId> {
    s.parse().map_err(|_| KwsError::usage(format!("unknown model `{s}`; valid ids: {}", ModelId::valid_ids())))
}

#[derive(Debug, Clone, PartialEq)]
enum DataSource {
    Micro,
    Dir(PathBuf),
}

fn data_source(s: &Settings, a: &DataArgs) -> Result<(DataSource, u64)> {
    let seed = s.or("data-seed", &a.data_seed, 0u64)?;
    let data = s
        .with_env("data", &a.data, DATA_ENV)
        .ok_or_else(|| KwsError::usage(format!("no dataset: pass --data DIR|micro or set {DATA_ENV}")))?;
    let src = if data == "micro" { DataSource::Micro } else { DataSource::Dir(PathBuf::from(data)) };
    if let DataSource::Dir(p) = &src {
        if !p.is_dir() {
            return Err(KwsError::usage(format!("dataset directory {} does not exist", p.display())));
        }
    }
    Ok((src, seed))
}

fn load_data(src: &DataSource, seed: u64) -> Result<LabeledDataset> {
    match src {
        DataSource::Micro => Ok(make_micro_dataset(seed)?),
        DataSource::Dir(root) => {
            let loaded = load_speech_commands(root, seed)?;
            let (ds, unparsed) = split_dataset(loaded.value, seed)?;
            if !unparsed.is_empty() {
                log::warn!("{} file name(s) without a speaker id were split by full name", unparsed.len());
            }
            log::info!("loaded {} clips from {}", ds.len(), root.display());
            Ok(ds)
        }
    }
}

fn noise_profile(item: &str, data_seed: u64) -> Result<NoiseProfile> {
    Ok(match item {
        "white" => NoiseProfile::white(0),
        "pink" => NoiseProfile::pink(0),
        "micro" => micro_noise_profile(data_seed)?,
        dir => load_noise_dir(Path::new(dir))?.value,
    })
}

fn check_noise_items(items: &[String]) -> Result<()> {
    for item in items {
        if !matches!(item.as_str(), "white" | "pink" | "micro") && !Path::new(item).is_dir() {
            return Err(KwsError::usage(format!("noise source `{item}` is neither white, pink, micro nor a directory")));
        }
    }
    Ok(())
}

fn noise_items(s: &Settings, flag: &Option<String>) -> Result<Vec<String>> {
    let items: Vec<String> = match s.with_env("noise", flag, NOISE_ENV) {
        Some(t) => t.split(',').map(|x| x.trim().to_string()).collect(),
        None => Vec::new(),
    };
    if items.iter().any(String::is_empty) {
        return Err(KwsError::usage("empty entry in --noise list"));
    }
    check_noise_items(&items)?;
    Ok(items)
}

fn db(s: &Settings, key: &str, flag: &Option<String>, default: f64) -> Result<SnrDb> {
    Ok(SnrDb::new(s.or(key, flag, default)?)?)
}

/// Training settings shared by `train` and `experiment`.
fn train_config(s: &Settings, a: &ScheduleArgs, micro: bool, noisy: bool) -> Result<TrainConfig> {
    let d = TrainConfig::default();
    let val = match s.get::<SnrArg>("val-snr", &a.val_snr)? {
        Some(v) => v.0,
        None if noisy => d.validation_snr,
        None => None,
    };
    let cfg = TrainConfig {
        epochs: s.or("epochs", &a.epochs, d.epochs)?,
        initial_lr: s.or("lr", &a.lr, d.initial_lr)?,
        decay_factor: s.or("decay", &a.decay, d.decay_factor)?,
        decay_every: s.or("decay-every", &a.decay_every, d.decay_every)?,
        batch_size: s.or("batch-size", &a.batch_size, if micro { DESK_BATCH_SIZE } else { FULL_BATCH_SIZE })?,
        train_snr_range: (db(s, "snr-min", &a.snr_min, -5.0)?, db(s, "snr-max", &a.snr_max, 10.0)?),
        validation_snr: val,
        dropout: Some(s.or("dropout", &a.dropout, 0.1)?),
        ..d
    };
    cfg.validate()?;
    Ok(cfg)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Formats with six decimals, printing negative zero as zero.
pub fn format_db(v: f64) -> String {
    let s = format!("{v:.6}");
    if s.strip_prefix('-').is_some_and(|r| r.chars().all(|c| c == '0' || c == '.')) {
        s[1..].to_string()
    } else {
        s
    }
}

fn cmd_mix(a: &MixArgs, file: &ConfigFile) -> Result<()> {
    let s = Settings { file };
    let input = PathBuf::from(s.required("in", &a.input)?);
    let noise = s.required("noise", &a.noise)?;
    let snr = SnrDb::new(parse_value::<f64>("--snr", &s.required("snr", &a.snr)?)?)?;
    let seed = s.or("seed", &a.seed, 0u64)?;
    let out = PathBuf::from(s.required("out", &a.out)?);
    check_noise_items(std::slice::from_ref(&noise))?;

    let clean = read_wav(&input)?;
    let profile = noise_profile(&noise, seed)?;
    let chunk = sample_noise_chunk(&profile, clean.len(), &mut stream(seed, Stream::NoiseInjection))?;
    let chunk = kws_core::signal::AudioClip::new(chunk.samples, clean.sample_rate);
    let mix = mix_at_snr(&clean, &chunk, snr)?;
    let measured = component_snr_db(&mix.clean_component(&clean), &mix.noise_component(&chunk))?;
    write_wav(&out, &mix.clip)?;
    println!("{} dB", format_db(measured));
    Ok(())
}

fn cmd_count(a: &CountArgs, file: &ConfigFile) -> Result<()> {
    let s = Settings { file };
    let id = model_id(&s.required("model", &a.model)?)?;
    let spec = id.spec();
    if a.layers {
        for c in layer_costs(&spec)? {
            if c.params > 0 || c.macs > 0 {
                println!("{:<28} params {:>8} macs {:>10}", c.path, c.params, c.macs);
            }
        }
    }
    println!("model {id}");
    println!("parameters {}", count_params(&spec)?);
    println!("macs {}", count_macs(&spec, spec.input_shape())?);
    Ok(())
}

fn cmd_train(a: &TrainArgs, file: &ConfigFile) -> Result<()> {
    let s = Settings { file };
    let id = model_id(&s.required("model", &a.model)?)?;
    let (src, data_seed) = data_source(&s, &a.data)?;
    let items = noise_items(&s, &a.noise)?;
    let mut cfg = train_config(&s, &a.schedule, src == DataSource::Micro, !items.is_empty())?;
    cfg.seed = s.or("seed", &a.seed, 0u64)?;
    let out = PathBuf::from(s.required("out", &a.out)?);
    let log_path = match raw(&a.log, file, "log") {
        Some(p) => PathBuf::from(p),
        None => out.with_extension("csv"),
    };

    let ds = load_data(&src, data_seed)?;
    cfg.noise_profiles = items.iter().map(|i| noise_profile(i, data_seed)).collect::<Result<_>>()?;
    let outcome = train(&id.spec(), &ds, &cfg)?;
    write_checkpoint(&out, &outcome.checkpoint)?;
    atomic_write(&log_path, &train_log_csv(&outcome.log))?;
    let m = outcome.checkpoint.metadata;
    println!(
        "best epoch {} validation accuracy {:.4} state {}",
        m.epoch,
        m.validation_accuracy,
        hex(&outcome.checkpoint.state_hash())
    );
    Ok(())
}

fn confusion_path(report: &Path) -> PathBuf {
    let stem = report.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
    report.with_file_name(format!("{stem}.confusion.csv"))
}

fn write_report(path: &Path, report: &EvalReport) -> Result<()> {
    atomic_write(path, &report_csv(report))?;
    atomic_write(&confusion_path(path), &confusion_csv(report))
}

fn print_report(report: &EvalReport) {
    for r in &report.rows {
        println!(
            "{} {} snr {} {} seed {} accuracy {:.4}",
            r.model,
            r.condition,
            snr_field(r.snr_db),
            bn_mode_name(r.bn_mode),
            r.seed,
            r.accuracy()
        );
    }
}

fn snr_list(s: &Settings, flag: &Option<String>) -> Result<Vec<Option<SnrDb>>> {
    Ok(match s.list::<SnrArg>("snr", flag)? {
        Some(v) => v.into_iter().map(|x| x.0).collect(),
        None => ExperimentConfig::default_snrs(),
    })
}

fn bn_list(s: &Settings, flag: &Option<String>, default: Vec<BnMode>) -> Result<Vec<BnMode>> {
    Ok(s.list::<BnArg>("bn", flag)?.map(|v| v.into_iter().map(|b| b.0).collect()).unwrap_or(default))
}

fn cmd_eval(a: &EvalArgs, file: &ConfigFile) -> Result<()> {
    let s = Settings { file };
    let ckpt = PathBuf::from(s.required("ckpt", &a.ckpt)?);
    let (src, data_seed) = data_source(&s, &a.data)?;
    let items = noise_items(&s, &a.noise)?;
    let condition: Condition = s.or("condition", &a.condition, Condition::Known)?;
    let test_snrs = snr_list(&s, &a.snr)?;
    let bn_modes = bn_list(&s, &a.bn, vec![BnMode::Frozen])?;
    let eval_batch = s.or("eval-batch", &a.eval_batch, kws_core::experiments::DEFAULT_EVAL_BATCH)?;
    let seed = s.or("seed", &a.seed, 0u64)?;
    let report_path = PathBuf::from(s.required("report", &a.report)?);
    if items.is_empty() && test_snrs.iter().any(Option::is_some) {
        return Err(KwsError::usage("noisy evaluation needs --noise (or KWS_NOISE_DIR)"));
    }

    let checkpoint = read_checkpoint(&ckpt)?;
    let mut cfg = ExperimentConfig::new(condition, checkpoint.spec.clone());
    cfg.test_snrs = test_snrs;
    cfg.bn_modes = bn_modes;
    cfg.eval_batch_size = eval_batch;
    cfg.train.batch_size = DESK_BATCH_SIZE;
    let ds = load_data(&src, data_seed)?;
    if ds.split_len(Split::Test) == 0 {
        return Err(KwsError::Core(kws_core::Error::Dataset("test split is empty".into())));
    }
    let profiles: Vec<NoiseProfile> = items.iter().map(|i| noise_profile(i, data_seed)).collect::<Result<_>>()?;
    let report = evaluate_checkpoint(&cfg, &checkpoint, &ds, &profiles, seed)?;
    write_report(&report_path, &report)?;
    print_report(&report);
    Ok(())
}

fn cmd_experiment(a: &ExperimentArgs, file: &ConfigFile) -> Result<()> {
    let s = Settings { file };
    let condition: Condition = parse_value("--condition", &s.required("condition", &a.condition)?)?;
    let id = model_id(&s.required("model", &a.model)?)?;
    let seeds: Vec<u64> = s.list("seeds", &a.seeds)?.unwrap_or_else(|| vec![0]);
    let (src, data_seed) = data_source(&s, &a.data)?;
    let misc = match s.with_env("noise", &a.noise, NOISE_ENV) {
        Some(m) => m,
        None if src == DataSource::Micro => "micro".into(),
        None => return Err(KwsError::usage(format!("miscellaneous noise required: pass --noise DIR or set {NOISE_ENV}"))),
    };
    if misc != "micro" && !Path::new(&misc).is_dir() {
        return Err(KwsError::usage(format!("noise directory {misc} does not exist")));
    }
    let mut cfg = ExperimentConfig::new(condition, id.spec());
    cfg.train = train_config(&s, &a.schedule, src == DataSource::Micro, true)?;
    cfg.test_snrs = snr_list(&s, &a.snr)?;
    cfg.bn_modes = bn_list(&s, &a.bn, cfg.bn_modes.clone())?;
    cfg.eval_batch_size = s.or("eval-batch", &a.eval_batch, cfg.eval_batch_size)?;
    cfg.seeds = seeds;
    let out_dir = PathBuf::from(s.required("out-dir", &a.out_dir)?);
    let default_jobs = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let jobs = s.or("jobs", &a.jobs, default_jobs)?.clamp(1, cfg.seeds.len().max(1));
    cfg.validate()?;

    let ds = load_data(&src, data_seed)?;
    let misc_profile = noise_profile(&misc, data_seed)?;
    let pools = NoisePools::new(NoiseProfile::white(0), NoiseProfile::pink(0), misc_profile)?;
    std::fs::create_dir_all(&out_dir).map_err(|e| KwsError::io(&out_dir, e))?;

    let outcomes = run_seeds(&cfg, &ds, &pools, jobs)?;
    for o in &outcomes {
        write_checkpoint(&out_dir.join(format!("seed{}.ckpt", o.seed)), &o.checkpoint)?;
        atomic_write(&out_dir.join(format!("seed{}.train.csv", o.seed)), &train_log_csv(&o.log))?;
    }
    let report = EvalReport::merge(outcomes.into_iter().map(|o| o.report));
    write_report(&out_dir.join("report.csv"), &report)?;
    print_report(&report);
    Ok(())
}

/// Runs seeds on `jobs` worker threads; results come back in seed-list order.
fn run_seeds(cfg: &ExperimentConfig, ds: &LabeledDataset, pools: &NoisePools, jobs: usize) -> Result<Vec<SeedOutcome>> {
    let indexed: Vec<(usize, u64)> = cfg.seeds.iter().copied().enumerate().collect();
    let mut results: Vec<(usize, kws_core::Result<SeedOutcome>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..jobs)
            .map(|w| {
                let mine: Vec<(usize, u64)> = indexed.iter().copied().skip(w).step_by(jobs).collect();
                scope.spawn(move || {
                    mine.into_iter()
                        .map(|(i, seed)| {
                            log::info!("seed {seed}: training");
                            (i, run_seed(cfg, ds, pools, seed))
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("experiment worker panicked")).collect()
    });
    results.sort_by_key(|(i, _)| *i);
    results.into_iter().map(|(_, r)| r.map_err(KwsError::from)).collect()
}
