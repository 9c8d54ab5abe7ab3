//! CSV forms of evaluation reports and training logs.
//!
//! Floats are written in Rust's shortest round-trip form, so equal values
//! always give equal bytes. A clean (noise-free) evaluation has `snr_db`
//! `inf`.

use kws_core::experiments::{bn_mode_name, EvalReport};
use kws_core::training::TrainLogRow;
use kws_core::NUM_CLASSES;

pub const REPORT_HEADER: [&str; 7] = ["model", "condition", "snr_db", "bn_mode", "seed", "eval_batch_size", "accuracy"];
pub const LOG_HEADER: [&str; 7] = ["epoch", "lr", "train_loss", "val_accuracy", "white_chunks", "pink_chunks", "file_chunks"];

pub fn snr_field(snr: Option<f64>) -> String {
    match snr {
        Some(db) => db.to_string(),
        None => "inf".into(),
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("writing to memory cannot fail")
}

pub fn report_csv(report: &EvalReport) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(REPORT_HEADER).unwrap();
    for r in &report.rows {
        w.write_record([
            r.model.clone(),
            r.condition.to_string(),
            snr_field(r.snr_db),
            bn_mode_name(r.bn_mode).into(),
            r.seed.to_string(),
            r.eval_batch_size.to_string(),
            r.accuracy().to_string(),
        ])
        .unwrap();
    }
    finish(w)
}

/// One line per (report row, true class) with the predicted-class counts.
pub fn confusion_csv(report: &EvalReport) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["model", "condition", "snr_db", "bn_mode", "seed", "true_class"].map(String::from).to_vec();
    header.extend((0..NUM_CLASSES).map(|c| format!("pred_{c}")));
    w.write_record(&header).unwrap();
    for r in &report.rows {
        for (class, counts) in r.evaluation.confusion.iter().enumerate() {
            let mut rec = vec![
                r.model.clone(),
                r.condition.to_string(),
                snr_field(r.snr_db),
                bn_mode_name(r.bn_mode).into(),
                r.seed.to_string(),
                class.to_string(),
            ];
            rec.extend(counts.iter().map(|c| c.to_string()));
            w.write_record(&rec).unwrap();
        }
    }
    finish(w)
}

pub fn train_log_csv(log: &[TrainLogRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(LOG_HEADER).unwrap();
    for r in log {
        w.write_record([
            r.epoch.to_string(),
            r.lr.to_string(),
            r.train_loss.to_string(),
            r.val_accuracy.to_string(),
            r.noise_chunks[0].to_string(),
            r.noise_chunks[1].to_string(),
            r.noise_chunks[2].to_string(),
        ])
        .unwrap();
    }
    finish(w)
}
