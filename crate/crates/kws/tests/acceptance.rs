//! Acceptance suite: one line per criterion, nonzero exit on any failure.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use common::cases;
use kws_core::experiments::{
    evaluate, make_micro_dataset, micro_noise_profile, run_known_noise_experiment, run_unknown_noise_experiment,
    Condition, EvalReport, ExperimentConfig, NoisePools, Split,
};
use kws_core::models::{
    build_modified_scn, build_scn, build_tc_resnet8, count_macs, count_params, micro_scn, micro_tc_resnet8,
    sinc_macs, Checkpoint, ForwardMode, FrontEnd, ModelSpec, Network, TrainingMetadata,
};
use kws_core::nn::{self, BatchNormState, BnMode, RunningStats, Tensor};
use kws_core::signal::{component_snr_db, mix_at_snr, AudioClip, NoiseProfile, SnrDb};
use kws_core::training::{gradient_check, initial_parameters, lr_schedule, TrainConfig, DESK_BATCH_SIZE};
use rand::{Rng, SeedableRng};

type Case = (&'static str, fn(u64) -> f64);
type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(value: u64, target: f64, tol: f64) -> bool {
    (value as f64 - target).abs() <= tol * target
}

fn macs(spec: &ModelSpec) -> u64 {
    count_macs(spec, spec.input_shape()).unwrap()
}

fn published_counts() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (spec, params, m) in [(build_tc_resnet8(), 66e3, 1.5e6), (build_scn(), 60e3, 18e6), (build_modified_scn(), 34.5e3, 7.5e6)] {
        let p = count_params(&spec).unwrap();
        let c = macs(&spec);
        pass &= within(p, params, 0.05) && within(c, m, 0.10);
        parts.push(format!("{} {p} params {c} MACs", spec.id));
    }
    outcome(pass, parts.join(", "))
}

fn structural() -> Outcome {
    let (s, m) = (build_scn(), build_modified_scn());
    let (ss, ms) = (sinc_macs(&s).unwrap(), sinc_macs(&m).unwrap());
    let share = ss as f64 / macs(&s) as f64;
    let pass = 2 * ms == ss && count_params(&m).unwrap() < count_params(&s).unwrap() && (0.45..=0.55).contains(&share);
    outcome(pass, format!("sinc MACs {ss} vs {ms}, share {:.1}%", 100.0 * share))
}

fn snr_exactness() -> Outcome {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut peak = 0.0f64;
    for _ in 0..1000 {
        let len = rng.random_range(64..4096);
        let amp = rng.random_range(0.01..1.0);
        let clean = AudioClip::new((0..len).map(|_| rng.random_range(-amp..amp)).collect(), 16000);
        let namp = rng.random_range(0.01..2.0);
        let noise = AudioClip::new((0..len).map(|_| rng.random_range(-namp..namp)).collect(), 16000);
        let snr = rng.random_range(-5.0..=10.0);
        let m = mix_at_snr(&clean, &noise, SnrDb::new(snr).unwrap()).unwrap();
        let measured = component_snr_db(&m.clean_component(&clean), &m.noise_component(&noise)).unwrap();
        worst = worst.max((measured - snr).abs());
        peak = m.clip.samples.iter().fold(peak, |p, s| p.max(s.abs()));
    }
    outcome(worst < 1e-9 && peak <= 1.0, format!("max deviation {worst:.2e} dB, peak {peak:.6}"))
}

fn sinc_fidelity() -> Outcome {
    let mut g = cases::rng(4);
    let l = 101;
    let guard = 4.0 / l as f64;
    let grid: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.5 / 1000.0).collect();
    let mut worst_pass = 0.0f64;
    let mut worst_reject = f64::INFINITY;
    for _ in 0..100 {
        let f1: f64 = g.random_range(0.0..0.3);
        let f2 = (f1 + g.random_range(0.1..0.3f64)).min(0.5);
        let h = nn::sinc_kernel(f1, f2, l).unwrap();
        let pass: Vec<f64> =
            grid.iter().filter(|&&f| f >= f1 + guard && f <= f2 - guard).map(|&f| common::dtft_mag(&h, f)).collect();
        let stop = grid
            .iter()
            .filter(|&&f| f <= f1 - guard || f >= f2 + guard)
            .map(|&f| common::dtft_mag(&h, f))
            .reduce(f64::max);
        let mean_db = 20.0 * (pass.iter().sum::<f64>() / pass.len() as f64).log10();
        worst_pass = worst_pass.max(mean_db.abs());
        if let Some(s) = stop {
            worst_reject = worst_reject.min(mean_db - 20.0 * s.log10());
        }
    }
    outcome(worst_pass <= 2.0 && worst_reject >= 20.0, format!("passband within {worst_pass:.3} dB, rejection >= {worst_reject:.1} dB"))
}

fn gradients() -> Outcome {
    let ds = make_micro_dataset(0).unwrap();
    let clips: Vec<&AudioClip> = ds.split(Split::Train).into_iter().step_by(97).take(2).collect();
    let labels: Vec<usize> = clips.iter().map(|c| c.label.unwrap()).collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for spec in [micro_tc_resnet8(), micro_scn(false), micro_scn(true)] {
        let x = FrontEnd::new(&spec.input).unwrap().batch(clips.iter().copied()).unwrap();
        let r = gradient_check(&spec, &x, &labels, 7).unwrap();
        pass &= r.max_rel_error < 1e-4 && r.input_rel_error < 1e-4 && r.checked > 0;
        parts.push(format!("{} {:.1e} over {}", spec.id, r.max_rel_error.max(r.input_rel_error), r.checked));
    }
    outcome(pass, parts.join(", "))
}

fn kernels() -> Outcome {
    let checks: [Case; 8] = [
        ("conv", cases::conv_forward),
        ("ds", cases::ds_forward),
        ("pool", cases::pool_forward),
        ("dense", cases::dense_forward),
        ("bn", cases::bn_forward),
        ("act", cases::activation_forward),
        ("sinc", cases::sinc_forward),
        ("softmax", cases::softmax_forward),
    ];
    let mut worst = 0.0f64;
    let mut name = "";
    for (n, f) in checks {
        for seed in 0..300 {
            let e = f(seed);
            if e > worst || e.is_nan() {
                worst = e;
                name = n;
            }
        }
    }
    outcome(worst < 1e-6, format!("8 kernels x 300 shapes, worst {worst:.1e} ({name})"))
}

fn unit_stats(t: &Tensor) -> (f64, f64) {
    let (n, c, len) = t.dims3().unwrap();
    let (mean, var) = common::channel_stats(t.data(), n, c, len);
    (mean.iter().fold(0.0f64, |m, v| m.max(v.abs())), var.iter().fold(0.0f64, |m, v| m.max((v - 1.0).abs())))
}

fn adaptive_bn() -> Outcome {
    let mut g = cases::rng(7);
    let x = Tensor::new(vec![6, 4, 40], (0..960).map(|i| 2.0 * (i % 4) as f64 + g.random_range(-3.0..3.0)).collect()).unwrap();
    let mut state = BatchNormState::new(4, BnMode::Adaptive);
    state.gamma = vec![1.5, -0.5, 2.0, 0.7];
    state.beta = vec![0.3, 0.0, -1.0, 2.0];
    state.running = RunningStats { mean: vec![0.5; 4], var: vec![3.0; 4] };
    let before = state.running.clone();
    let (_, cache) = state.forward(&x).unwrap();
    let (mut worst_mean, mut worst_var) = unit_stats(&cache.normalized);
    let mut pass = state.running == before;

    let spec = micro_tc_resnet8();
    let net = Network::new(&spec).unwrap();
    let mut params = initial_parameters(&net, 5);
    for s in params.bn.iter_mut() {
        s.mean.iter_mut().for_each(|m| *m = 0.2);
        s.var.iter_mut().for_each(|v| *v = 2.0);
    }
    let ck = Checkpoint::new(spec.clone(), params, TrainingMetadata { epoch: 0, validation_accuracy: 0.0, seed: 5 }).unwrap();
    let hash = ck.state_hash();
    let stats = ck.params.bn.clone();
    let ds = make_micro_dataset(0).unwrap();
    let test = ds.split(Split::Test);
    let input = FrontEnd::new(&spec.input).unwrap().batch(test.iter().copied().take(16)).unwrap();
    let (_, tape) = net.forward(&ck.params, &input, ForwardMode::AdaptiveEval, &mut cases::rng(0)).unwrap();
    for (_, c) in tape.bn_caches() {
        let (m, v) = unit_stats(&c.normalized);
        worst_mean = worst_mean.max(m);
        worst_var = worst_var.max(v);
    }
    let profiles = [NoiseProfile::white(0)];
    evaluate(&ck, &test, Some(SnrDb::new(0.0).unwrap()), &profiles, BnMode::Adaptive, 16, 1).unwrap();
    pass &= ck.state_hash() == hash && ck.params.bn == stats;
    pass &= worst_mean < 1e-5 && worst_var < 1e-3;
    outcome(pass, format!("max |mean| {worst_mean:.1e}, max |var - 1| {worst_var:.1e}, running stats and hash unchanged: {pass}"))
}

fn trends() -> Outcome {
    let start = Instant::now();
    let ds = make_micro_dataset(0).unwrap();
    let pools = NoisePools::new(NoiseProfile::white(0), NoiseProfile::pink(0), micro_noise_profile(0).unwrap()).unwrap();
    let train = TrainConfig { epochs: 15, batch_size: DESK_BATCH_SIZE, ..TrainConfig::default() };
    let config = |condition| ExperimentConfig {
        test_snrs: [-5.0, 10.0].iter().map(|&d| Some(SnrDb::new(d).unwrap())).collect(),
        bn_modes: vec![BnMode::Frozen, BnMode::Adaptive],
        seeds: (0..5).collect(),
        train: train.clone(),
        ..ExperimentConfig::new(condition, micro_tc_resnet8())
    };
    let (unknown, _) = run_unknown_noise_experiment(&config(Condition::Unknown), &ds, &pools).unwrap();
    let (known, _) = run_known_noise_experiment(&config(Condition::Known), &ds, &pools).unwrap();
    let report = EvalReport::merge([unknown, known]);
    let acc = |c, snr, bn| report.mean_accuracy(c, Some(snr), bn).unwrap();
    let u_low = acc(Condition::Unknown, -5.0, BnMode::Frozen);
    let u_high = acc(Condition::Unknown, 10.0, BnMode::Frozen);
    let u_adapt = acc(Condition::Unknown, -5.0, BnMode::Adaptive);
    let k_low = acc(Condition::Known, -5.0, BnMode::Frozen);
    let secs = start.elapsed().as_secs_f64();
    let (a, b, c) = (u_low < u_high, u_adapt >= u_low, k_low >= u_low);
    outcome(
        a && b && c && secs < 1800.0,
        format!(
            "5 seeds: (a) {u_low:.4} < {u_high:.4} {a}, (b) adaptive {u_adapt:.4} >= frozen {u_low:.4} {b}, \
             (c) known {k_low:.4} >= unknown {u_low:.4} {c}, {secs:.0} s"
        ),
    )
}

fn kws(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_kws"))
        .args(args)
        .env_remove("KWS_DATA_DIR")
        .env_remove("KWS_NOISE_DIR")
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn same(a: &Path, b: &Path) -> bool {
    matches!((fs::read(a), fs::read(b)), (Ok(x), Ok(y)) if x == y)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = |n: &str| dir.path().join(n);
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let mut ran = true;
    for name in ["a.ckpt", "b.ckpt"] {
        ran &= kws(&[
            "train", "--model", "micro-tc-resnet8", "--data", "micro", "--noise", "white,pink", "--epochs", "3", "--seed",
            "11", "--out", &s(&path(name)),
        ]);
    }
    for name in ["a.csv", "b.csv"] {
        ran &= kws(&[
            "eval", "--ckpt", &s(&path("a.ckpt")), "--data", "micro", "--noise", "micro", "--snr", "-5,0,5,10", "--bn",
            "frozen,adaptive", "--seed", "11", "--report", &s(&path(name)),
        ]);
    }
    let ckpt = same(&path("a.ckpt"), &path("b.ckpt"));
    let csv = same(&path("a.csv"), &path("b.csv")) && same(&path("a.confusion.csv"), &path("b.confusion.csv"));
    outcome(ran && ckpt && csv, format!("checkpoints identical {ckpt}, reports identical {csv}"))
}

fn schedule() -> Outcome {
    let cfg = TrainConfig::default();
    let v = [0, 10, 20].map(|e| lr_schedule(e, &cfg));
    outcome(v == [0.1, 0.075, 0.05625], format!("{} / {} / {}", v[0], v[1], v[2]))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("published parameter and MAC counts", published_counts),
        ("sinc-layer structural claims", structural),
        ("SNR exactness", snr_exactness),
        ("sinc filter fidelity", sinc_fidelity),
        ("full-model gradient check", gradients),
        ("kernel oracle equivalence", kernels),
        ("adaptive batch-norm definition", adaptive_bn),
        ("desk-scale trends", trends),
        ("CLI determinism", determinism),
        ("learning-rate schedule", schedule),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {}: {} {name}: {} [{:.1} s]",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
