use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use kws::wav::{read_wav, write_wav};
use kws_core::signal::AudioClip;

fn kws(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kws"))
        .args(args)
        .env_remove("KWS_DATA_DIR")
        .env_remove("KWS_NOISE_DIR")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(o: Output) -> Output {
    assert_eq!(o.status.code(), Some(0), "stderr: {}", stderr(&o));
    o
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn tone(path: &Path) {
    let s = (0..16000).map(|i| 0.3 * (i as f64 * 0.11).sin()).collect();
    write_wav(path, &AudioClip::new(s, 16000)).unwrap();
}

#[test]
fn mix_hits_the_requested_snr() {
    let dir = tempfile::tempdir().unwrap();
    let clean = dir.path().join("clean.wav");
    tone(&clean);
    let a = dir.path().join("a.wav");
    let b = dir.path().join("b.wav");
    let o = ok(kws(&["mix", "--in", p(&clean), "--noise", "white", "--snr", "0", "--seed", "5", "--out", p(&a)]));
    assert_eq!(stdout(&o).trim(), "0.000000 dB");
    ok(kws(&["mix", "--in", p(&clean), "--noise", "white", "--snr", "0", "--seed", "5", "--out", p(&b)]));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let o = ok(kws(&["mix", "--in", p(&clean), "--noise", "pink", "--snr", "-5", "--out", p(&b)]));
    assert_eq!(stdout(&o).trim(), "-5.000000 dB");
    assert!(read_wav(&b).unwrap().samples.iter().all(|v| v.abs() <= 1.0));
}

#[test]
fn mix_reports_missing_input() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.wav");
    let o = kws(&["mix", "--in", p(&missing), "--noise", "white", "--snr", "0", "--out", p(&dir.path().join("o.wav"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.wav"));
    let o = kws(&["mix", "--in", p(&missing), "--noise", "white", "--snr", "loud", "--out", "o.wav"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(kws(&["mix"]).status.code(), Some(2));
    assert_eq!(kws(&["--help"]).status.code(), Some(0));
}

#[test]
fn count_prints_model_costs() {
    let o = ok(kws(&["count", "--model", "tc-resnet8"]));
    assert_eq!(stdout(&o), "model tc-resnet8\nparameters 65168\nmacs 1522560\n");
    let o = ok(kws(&["count", "--model", "scn-mod", "--layers"]));
    assert!(stdout(&o).contains("parameters 33944"));
    assert!(stdout(&o).lines().count() > 3);
    let o = kws(&["count", "--model", "resnet50"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("scn-mod") && stderr(&o).contains("micro-tc-resnet8"));
}

#[test]
fn train_writes_log_and_reproducible_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.ckpt");
    let b = dir.path().join("b.ckpt");
    let args = |out: &Path| {
        vec!["train", "--model", "micro-scn-mod", "--data", "micro", "--noise", "white,pink", "--epochs", "3", "--seed", "2", "--out"]
            .into_iter()
            .map(String::from)
            .chain([p(out).to_string()])
            .collect::<Vec<_>>()
    };
    let run = |out: &Path| ok(kws(&args(out).iter().map(String::as_str).collect::<Vec<_>>()));
    let first = run(&a);
    run(&b);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert!(stdout(&first).contains("state "));
    let log = fs::read_to_string(a.with_extension("csv")).unwrap();
    let rows: Vec<&str> = log.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.ends_with(",0")));
    assert_eq!(log, fs::read_to_string(b.with_extension("csv")).unwrap());
}

#[test]
fn divergence_exits_with_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.ckpt");
    let o = kws(&["train", "--model", "micro-scn-mod", "--data", "micro", "--epochs", "2", "--lr", "1e300", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(3), "stderr: {}", stderr(&o));
    let e = stderr(&o);
    assert!(e.contains("epoch") && e.contains("batch"), "{e}");
    assert!(!out.exists());
}

#[test]
fn eval_grid_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let ck = dir.path().join("m.ckpt");
    ok(kws(&["train", "--model", "micro-scn", "--data", "micro", "--epochs", "1", "--noise", "white", "--out", p(&ck)]));
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let eval = |report: &Path| {
        ok(kws(&[
            "eval", "--ckpt", p(&ck), "--data", "micro", "--noise", "white,pink", "--snr", "-5,0,5,10", "--bn",
            "frozen,adaptive", "--seed", "9", "--report", p(report),
        ]))
    };
    eval(&a);
    eval(&b);
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 1 + 8);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read(dir.path().join("a.confusion.csv")).unwrap(), fs::read(dir.path().join("b.confusion.csv")).unwrap());
    assert!(text.lines().skip(1).all(|l| l.starts_with("micro-scn,known,")));

    let clean = dir.path().join("clean.csv");
    ok(kws(&["eval", "--ckpt", p(&ck), "--data", "micro", "--snr", "clean", "--report", p(&clean)]));
    assert!(fs::read_to_string(&clean).unwrap().lines().nth(1).unwrap().contains(",inf,frozen,"));
    let o = kws(&["eval", "--ckpt", p(&ck), "--data", "micro", "--snr", "0", "--report", p(&clean)]);
    assert_eq!(o.status.code(), Some(2));
    let o = kws(&["eval", "--ckpt", p(&dir.path().join("none.ckpt")), "--data", "micro", "--snr", "clean", "--report", p(&clean)]);
    assert_eq!(o.status.code(), Some(2));
}

fn chunk_columns(log: &str) -> Vec<[u64; 3]> {
    log.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<u64> = l.split(',').skip(4).map(|v| v.parse().unwrap()).collect();
            [f[0], f[1], f[2]]
        })
        .collect()
}

#[test]
fn experiment_conditions() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = dir.path().join("unknown");
    ok(kws(&[
        "experiment", "--condition", "unknown", "--model", "micro-scn-mod", "--data", "micro", "--seeds", "1,2,3",
        "--epochs", "1", "--snr", "-5,0", "--bn", "frozen,adaptive", "--jobs", "2", "--out-dir", p(&unknown),
    ]));
    let report = fs::read_to_string(unknown.join("report.csv")).unwrap();
    assert_eq!(report.lines().count(), 1 + 3 * 2 * 2);
    let seeds: Vec<&str> = report.lines().skip(1).map(|l| l.split(',').nth(4).unwrap()).collect();
    assert_eq!(seeds, ["1", "1", "1", "1", "2", "2", "2", "2", "3", "3", "3", "3"]);
    for s in 1..=3 {
        assert!(unknown.join(format!("seed{s}.ckpt")).exists());
        let cols = chunk_columns(&fs::read_to_string(unknown.join(format!("seed{s}.train.csv"))).unwrap());
        assert!(cols.iter().all(|c| c[0] > 0 && c[1] > 0 && c[2] == 0));
    }

    let known = dir.path().join("known");
    ok(kws(&[
        "experiment", "--condition", "known", "--model", "micro-scn-mod", "--data", "micro", "--seeds", "1",
        "--epochs", "1", "--snr", "0", "--out-dir", p(&known),
    ]));
    let cols = chunk_columns(&fs::read_to_string(known.join("seed1.train.csv")).unwrap());
    assert!(cols.iter().all(|c| c.iter().all(|&n| n > 0)));

    let single = dir.path().join("single");
    ok(kws(&[
        "experiment", "--condition", "unknown", "--model", "micro-scn-mod", "--data", "micro", "--seeds", "1,2,3",
        "--epochs", "1", "--snr", "-5,0", "--bn", "frozen,adaptive", "--jobs", "1", "--out-dir", p(&single),
    ]));
    assert_eq!(fs::read(single.join("report.csv")).unwrap(), report.as_bytes());
}

#[test]
fn config_file_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let ck = dir.path().join("c.ckpt");
    fs::write(&cfg, format!("# desk run\nmodel = micro-scn-mod\ndata = micro\nepochs = 2\nout = {}\n", p(&ck))).unwrap();
    ok(kws(&["--config", p(&cfg), "train"]));
    assert_eq!(fs::read_to_string(ck.with_extension("csv")).unwrap().lines().count(), 3);
    ok(kws(&["--config", p(&cfg), "train", "--epochs", "1"]));
    assert_eq!(fs::read_to_string(ck.with_extension("csv")).unwrap().lines().count(), 2);

    let o = Command::new(env!("CARGO_BIN_EXE_kws"))
        .args(["train", "--model", "micro-scn-mod", "--epochs", "1", "--out", p(&ck)])
        .env("KWS_DATA_DIR", "micro")
        .env_remove("KWS_NOISE_DIR")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "model = micro-scn\nlearning-rate = 3\n").unwrap();
    let o = kws(&["--config", p(&bad), "train"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("learning-rate"));
    fs::write(&bad, "snr = 0\n").unwrap();
    assert_eq!(kws(&["--config", p(&bad), "count", "--model", "scn"]).status.code(), Some(2));
    assert_eq!(kws(&["--config", p(&dir.path().join("missing.cfg")), "count", "--model", "scn"]).status.code(), Some(2));
    assert_eq!(kws(&["train", "--model", "micro-scn", "--out", p(&ck)]).status.code(), Some(2));
}
