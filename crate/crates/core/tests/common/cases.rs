//! Randomized kernel-versus-oracle cases. Each function draws one random
//! shape from `seed` and returns the maximum error observed.

use super::*;
use kws_core::nn::{self, BnConfig, BnMode, RunningStats, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn randv(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
}

pub fn tensor(r: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    Tensor::new(shape.to_vec(), randv(r, shape.iter().product())).unwrap()
}

/// Relative error floored at 1e-9 so cancellations to ~0 are judged on an
/// absolute scale.
pub fn kernel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-9)).fold(0.0, f64::max)
}

/// Gradient error with the gradient-check floor of 1e-6.
pub fn grad_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-6)).fold(0.0, f64::max)
}

pub struct ConvCase {
    pub n: usize,
    pub c_in: usize,
    pub c_out: usize,
    pub k: usize,
    pub t: usize,
    pub stride: usize,
    pub groups: usize,
}

pub fn conv_case(r: &mut ChaCha8Rng) -> ConvCase {
    let groups = r.random_range(1..=3);
    let k = r.random_range(1..=7);
    ConvCase {
        n: r.random_range(1..=3),
        c_in: groups * r.random_range(1..=3),
        c_out: groups * r.random_range(1..=3),
        k,
        t: r.random_range(1..=24),
        stride: r.random_range(1..=3),
        groups,
    }
}

pub fn conv_forward(seed: u64) -> f64 {
    let mut r = rng(seed);
    let c = conv_case(&mut r);
    let x = tensor(&mut r, &[c.n, c.c_in, c.t]);
    let w = tensor(&mut r, &[c.c_out, c.c_in / c.groups, c.k]);
    let y = nn::conv1d(&x, &w, c.stride, c.groups).unwrap();
    let o = conv1d(x.data(), c.n, c.c_in, c.t, w.data(), c.c_out, c.k, c.stride, c.groups);
    kernel_err(y.data(), &o)
}

pub fn ds_forward(seed: u64) -> f64 {
    let mut r = rng(seed);
    let g = r.random_range(1..=4);
    let ch = g * r.random_range(1..=3);
    let c_out = g * r.random_range(1..=3);
    let (n, k, t, s) = (r.random_range(1..=3), r.random_range(1..=7), r.random_range(2..=24), r.random_range(1..=3));
    let x = tensor(&mut r, &[n, ch, t]);
    let dw = tensor(&mut r, &[ch, 1, k]);
    let pw = tensor(&mut r, &[c_out, ch / g, 1]);
    let y = nn::depthwise_separable(&x, &dw, &pw, s, g).unwrap();
    let mid = conv1d(x.data(), n, ch, t, dw.data(), ch, k, s, ch);
    let o = conv1d(&mid, n, ch, t.div_ceil(s), pw.data(), c_out, 1, 1, g);
    kernel_err(y.data(), &o)
}

pub fn pool_forward(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (n, c, t) = (r.random_range(1..=3), r.random_range(1..=4), r.random_range(1..=30));
    let w = r.random_range(1..=t);
    let s = r.random_range(1..=4);
    let x = tensor(&mut r, &[n, c, t]);
    let y = nn::avg_pool(&x, w, s).unwrap();
    let e1 = kernel_err(y.data(), &avg_pool(x.data(), n * c, t, w, s));
    let g = nn::global_avg_pool(&x).unwrap();
    let e2 = kernel_err(g.data(), &avg_pool(x.data(), n * c, t, t, 1));
    e1.max(e2)
}

pub fn dense_forward(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (n, f, o) = (r.random_range(1..=4), r.random_range(1..=20), r.random_range(1..=12));
    let x = tensor(&mut r, &[n, f, 1]);
    let w = tensor(&mut r, &[o, f]);
    let y = nn::dense(&x, &w).unwrap();
    kernel_err(y.data(), &dense(x.data(), n, f, w.data(), o))
}

pub fn bn_forward(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (n, c, t) = (r.random_range(1..=4), r.random_range(1..=5), r.random_range(2..=12));
    let x = tensor(&mut r, &[n, c, t]);
    let gamma = randv(&mut r, c);
    let beta = randv(&mut r, c);
    let running = RunningStats { mean: randv(&mut r, c), var: (0..c).map(|_| r.random_range(0.1..2.0)).collect() };
    let (bm, bv) = channel_stats(x.data(), n, c, t);
    let mut worst = 0.0f64;
    for (mode, mean, var) in [
        (BnMode::Train, &bm, &bv),
        (BnMode::Adaptive, &bm, &bv),
        (BnMode::Frozen, &running.mean, &running.var),
    ] {
        let (y, _) = nn::batchnorm_forward(&x, &gamma, &beta, &running, &BnConfig::new(mode)).unwrap();
        let o = batchnorm(x.data(), n, c, t, mean, var, &gamma, &beta, nn::BN_EPSILON);
        worst = worst.max(kernel_err(y.data(), &o));
    }
    worst
}

pub fn activation_forward(seed: u64) -> f64 {
    let mut r = rng(seed);
    let len = r.random_range(1..=64);
    let x = Tensor::new(vec![1, 1, len], (0..len).map(|_| r.random_range(-10.0..10.0)).collect()).unwrap();
    let relu: Vec<f64> = x.data().iter().map(|v| if *v > 0.0 { *v } else { 0.0 }).collect();
    let logc: Vec<f64> = x.data().iter().map(|v| (v.abs() + 1.0).ln()).collect();
    kernel_err(nn::relu(&x).data(), &relu).max(kernel_err(nn::log_compress(&x).data(), &logc))
}

/// Sinc kernel against the windowed band-pass definition written out with `sin(x)/x`.
pub fn sinc_forward(seed: u64) -> f64 {
    let mut r = rng(seed);
    let half = r.random_range(0..=50);
    let len = 2 * half + 1;
    let f1 = r.random_range(0.0..0.45);
    let f2 = r.random_range(f1..0.5);
    let h = nn::sinc_kernel(f1, f2, len).unwrap();
    let sinc = |x: f64| if x == 0.0 { 1.0 } else { x.sin() / x };
    let o: Vec<f64> = (0..len)
        .map(|i| {
            let n = i as f64 - half as f64;
            let w = if len == 1 { 1.0 } else { 0.54 - 0.46 * (2.0 * PI * i as f64 / (len - 1) as f64).cos() };
            (2.0 * f2 * sinc(2.0 * PI * f2 * n) - 2.0 * f1 * sinc(2.0 * PI * f1 * n)) * w
        })
        .collect();
    scaled_err(&h, &o)
}

pub fn softmax_forward(seed: u64) -> f64 {
    let mut r = rng(seed);
    let n = r.random_range(1..=5);
    let z: Vec<f64> = (0..n * 12).map(|_| r.random_range(-20.0..20.0)).collect();
    let labels: Vec<usize> = (0..n).map(|_| r.random_range(0..12)).collect();
    let ce = nn::softmax_cross_entropy(&Tensor::new(vec![n, 12], z.clone()).unwrap(), &labels).unwrap();
    let mut probs = Vec::new();
    let mut loss = 0.0;
    for (row, &l) in z.chunks(12).zip(&labels) {
        let m = row.iter().cloned().fold(f64::MIN, f64::max);
        let s: f64 = row.iter().map(|v| (v - m).exp()).sum();
        probs.extend(row.iter().map(|v| (v - m).exp() / s));
        loss += -((row[l] - m).exp() / s).ln();
    }
    kernel_err(ce.probabilities.data(), &probs).max(rel_err(ce.loss, loss / n as f64))
}
