use kws_core::features::*;
use kws_core::signal::{generate_pink, generate_white, silence, AudioClip};

#[test]
fn default_geometry_is_98_by_40() {
    let cfg = MfccConfig::default();
    assert_eq!(cfg.window_samples(), 480);
    assert_eq!(cfg.hop_samples(), 160);
    assert_eq!(cfg.num_frames(16000), 1 + (16000 - 480) / 160);
    let fm = mfcc(&generate_white(16000, 1).unwrap(), &cfg).unwrap();
    assert_eq!((fm.frames, fm.num_coefficients), (98, 40));
    assert_eq!(fm.values.len(), 98 * 40);
    assert!(fm.values.iter().all(|v| v.is_finite()));
    assert_eq!((fm.frame_hop_ms, fm.window_length_ms), (10.0, 30.0));
}

#[test]
fn silence_propagates_the_log_floor() {
    let cfg = MfccConfig::default();
    let fm = mfcc(&silence(16000), &cfg).unwrap();
    let m = cfg.num_filters as f64;
    let c0 = m * (1e-10f64).ln() * (1.0 / m).sqrt();
    for f in 0..fm.frames {
        assert!((fm.get(f, 0) - c0).abs() < 1e-9);
        for k in 1..fm.num_coefficients {
            assert!(fm.get(f, k).abs() < 1e-9);
        }
    }
}

#[test]
fn tone_peaks_in_nearest_filter() {
    let cfg = MfccConfig::default();
    let ex = MfccExtractor::new(cfg.clone()).unwrap();
    let sine: Vec<f64> = (0..16000).map(|i| 0.5 * (2.0 * std::f64::consts::PI * 1000.0 * i as f64 / 16000.0).sin()).collect();
    let (log_mel, frames) = ex.log_mel(&sine).unwrap();
    let centers = ex.filter_centers_hz();
    let nearest = (0..centers.len()).min_by(|&a, &b| (centers[a] - 1000.0).abs().total_cmp(&(centers[b] - 1000.0).abs())).unwrap();
    let m = cfg.num_filters;
    for f in 0..frames {
        let row = &log_mel[f * m..(f + 1) * m];
        let arg = (0..m).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
        assert_eq!(arg, nearest, "frame {f}");
    }
}

#[test]
fn amplitude_scaling_moves_only_c0() {
    let cfg = MfccConfig::default();
    let ex = MfccExtractor::new(cfg.clone()).unwrap();
    let clip = generate_pink(16000, 4).unwrap();
    let base = ex.extract(&clip).unwrap();
    let (lm, _) = ex.log_mel(&clip.samples).unwrap();
    assert!(lm.iter().all(|&v| v > (1e-10f64).ln() + 1.0), "test clip must stay above the log floor");
    let m = cfg.num_filters as f64;
    for alpha in [0.5, 0.1, 3.0] {
        let scaled = AudioClip::new(clip.samples.iter().map(|s| s * alpha).collect(), 16000);
        let fm = ex.extract(&scaled).unwrap();
        let shift = 2.0 * f64::ln(alpha) * m.sqrt();
        for f in 0..fm.frames {
            assert!((fm.get(f, 0) - base.get(f, 0) - shift).abs() < 1e-6);
            for k in 1..fm.num_coefficients {
                assert!((fm.get(f, k) - base.get(f, k)).abs() < 1e-6, "alpha {alpha} frame {f} coef {k}");
            }
        }
    }
}

#[test]
fn extraction_is_pure() {
    let cfg = MfccConfig::default();
    let c = generate_white(16000, 9).unwrap();
    assert_eq!(mfcc(&c, &cfg).unwrap(), mfcc(&c, &cfg).unwrap());
}

#[test]
fn empty_filterbank_is_a_config_error() {
    let mut cfg = MfccConfig::default();
    cfg.num_filters = 0;
    assert!(matches!(MfccExtractor::new(cfg), Err(kws_core::Error::Config(_))));
    let mut cfg = MfccConfig::default();
    cfg.num_coefficients = 0;
    assert!(matches!(MfccExtractor::new(cfg), Err(kws_core::Error::Config(_))));
}

#[test]
fn channel_major_transposes() {
    let fm = mfcc(&generate_white(16000, 2).unwrap(), &MfccConfig::default()).unwrap();
    let cm = fm.to_channel_major();
    assert_eq!(cm[3 * fm.frames + 7], fm.get(7, 3));
}

#[test]
fn fft_matches_direct_dft() {
    let n = 64;
    let x: Vec<f64> = (0..n).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
    let mut re = x.clone();
    let mut im = vec![0.0; n];
    fft_in_place(&mut re, &mut im);
    for k in 0..n {
        let (mut r, mut i) = (0.0, 0.0);
        for (j, v) in x.iter().enumerate() {
            let a = -2.0 * std::f64::consts::PI * (j * k) as f64 / n as f64;
            r += v * a.cos();
            i += v * a.sin();
        }
        assert!((re[k] - r).abs() < 1e-9 && (im[k] - i).abs() < 1e-9);
    }
}
