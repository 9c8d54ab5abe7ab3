//! Grouped 1-D cross-correlation with "same" zero padding and no bias.

use alloc::format;
use alloc::vec;

use super::Tensor;
use crate::{Error, Result};

/// `ceil(t / stride)`.
pub fn conv_output_len(t: usize, stride: usize) -> usize {
    t.div_ceil(stride)
}

/// Zeros inserted before the first sample. Total padding is
/// `max((T_out - 1) * stride + K - T, 0)`, split with the smaller half first.
pub fn same_padding(t: usize, kernel: usize, stride: usize) -> usize {
    let t_out = conv_output_len(t, stride);
    ((t_out - 1) * stride + kernel).saturating_sub(t) / 2
}

struct Geometry {
    n: usize,
    c_in: usize,
    t: usize,
    c_out: usize,
    k: usize,
    in_per_group: usize,
    out_per_group: usize,
    t_out: usize,
    pad: usize,
    stride: usize,
}

fn geometry(input: &Tensor, weights: &Tensor, stride: usize, groups: usize) -> Result<Geometry> {
    let (n, c_in, t) = input.dims3()?;
    let (c_out, in_per_group, k) = match weights.shape()[..] {
        [a, b, c] => (a, b, c),
        _ => return Err(Error::shape(format!("conv weights must be [C_out, C_in/g, K], got {:?}", weights.shape()))),
    };
    if stride == 0 || groups == 0 {
        return Err(Error::config("stride and groups must be positive"));
    }
    if c_in % groups != 0 || c_out % groups != 0 {
        return Err(Error::shape(format!(
            "channels {c_in} -> {c_out} not divisible by {groups} groups"
        )));
    }
    if in_per_group != c_in / groups {
        return Err(Error::shape(format!(
            "weights expect {in_per_group} input channels per group, input gives {}",
            c_in / groups
        )));
    }
    let t_out = conv_output_len(t, stride);
    let pad = same_padding(t, k, stride);
    if k > t + 2 * pad + 1 {
        return Err(Error::shape(format!("kernel {k} longer than padded input {t}")));
    }
    Ok(Geometry { n, c_in, t, c_out, k, in_per_group, out_per_group: c_out / groups, t_out, pad, stride })
}

/// Output positions `t` for which `t * stride + tap - pad` lies in `[0, len)`.
#[inline]
fn valid_range(tap: usize, pad: usize, stride: usize, len: usize, t_out: usize) -> (usize, usize) {
    // t * stride + tap >= pad
    let lo = if tap >= pad { 0 } else { (pad - tap).div_ceil(stride) };
    // t * stride + tap - pad <= len - 1
    let hi = if len + pad > tap { ((len + pad - tap - 1) / stride + 1).min(t_out) } else { 0 };
    (lo, hi.max(lo))
}

/// Grouped cross-correlation: `input [N, C_in, T]`, `weights [C_out, C_in/groups, K]`
/// -> `[N, C_out, ceil(T/stride)]`.
pub fn conv1d(input: &Tensor, weights: &Tensor, stride: usize, groups: usize) -> Result<Tensor> {
    let g = geometry(input, weights, stride, groups)?;
    let x = input.data();
    let w = weights.data();
    let mut out = vec![0.0; g.n * g.c_out * g.t_out];
    for b in 0..g.n {
        for co in 0..g.c_out {
            let group = co / g.out_per_group;
            let y = &mut out[(b * g.c_out + co) * g.t_out..][..g.t_out];
            for cig in 0..g.in_per_group {
                let ci = group * g.in_per_group + cig;
                let xs = &x[(b * g.c_in + ci) * g.t..][..g.t];
                let ws = &w[(co * g.in_per_group + cig) * g.k..][..g.k];
                for (tap, &wv) in ws.iter().enumerate() {
                    let (lo, hi) = valid_range(tap, g.pad, g.stride, g.t, g.t_out);
                    if hi == lo {
                        continue;
                    }
                    if g.stride == 1 {
                        let off = lo + tap - g.pad;
                        for (yv, xv) in y[lo..hi].iter_mut().zip(&xs[off..off + hi - lo]) {
                            *yv += wv * xv;
                        }
                    } else {
                        for t in lo..hi {
                            y[t] += wv * xs[t * g.stride + tap - g.pad];
                        }
                    }
                }
            }
        }
    }
    Tensor::new(vec![g.n, g.c_out, g.t_out], out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrads {
    pub input: Tensor,
    pub weights: Tensor,
}

/// Gradients of [`conv1d`] with respect to its input and weights.
pub fn conv1d_backward(
    input: &Tensor,
    weights: &Tensor,
    grad_output: &Tensor,
    stride: usize,
    groups: usize,
) -> Result<ConvGrads> {
    let g = geometry(input, weights, stride, groups)?;
    if grad_output.shape() != [g.n, g.c_out, g.t_out] {
        return Err(Error::shape(format!(
            "conv output gradient {:?}, expected {:?}",
            grad_output.shape(),
            [g.n, g.c_out, g.t_out]
        )));
    }
    let x = input.data();
    let w = weights.data();
    let gy = grad_output.data();
    let mut gx = vec![0.0; x.len()];
    let mut gw = vec![0.0; w.len()];
    for b in 0..g.n {
        for co in 0..g.c_out {
            let group = co / g.out_per_group;
            let dy = &gy[(b * g.c_out + co) * g.t_out..][..g.t_out];
            for cig in 0..g.in_per_group {
                let ci = group * g.in_per_group + cig;
                let xbase = (b * g.c_in + ci) * g.t;
                let wbase = (co * g.in_per_group + cig) * g.k;
                for tap in 0..g.k {
                    let wv = w[wbase + tap];
                    let (lo, hi) = valid_range(tap, g.pad, g.stride, g.t, g.t_out);
                    let mut acc = 0.0;
                    for t in lo..hi {
                        let xi = xbase + t * g.stride + tap - g.pad;
                        acc += x[xi] * dy[t];
                        gx[xi] += wv * dy[t];
                    }
                    gw[wbase + tap] += acc;
                }
            }
        }
    }
    Ok(ConvGrads {
        input: Tensor::new(input.shape().to_vec(), gx)?,
        weights: Tensor::new(weights.shape().to_vec(), gw)?,
    })
}

/// Depthwise conv (one filter per channel, `depthwise [C, 1, K]`) followed by a
/// grouped pointwise conv (`pointwise [C_out, C/groups, 1]`). The stride
/// applies to the depthwise stage.
pub fn depthwise_separable(
    input: &Tensor,
    depthwise: &Tensor,
    pointwise: &Tensor,
    stride: usize,
    pointwise_groups: usize,
) -> Result<Tensor> {
    let (_, c, _) = input.dims3()?;
    check_ds(c, pointwise, pointwise_groups)?;
    let mid = conv1d(input, depthwise, stride, c)?;
    conv1d(&mid, pointwise, 1, pointwise_groups)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DsGrads {
    pub input: Tensor,
    pub depthwise: Tensor,
    pub pointwise: Tensor,
}

pub fn depthwise_separable_backward(
    input: &Tensor,
    depthwise: &Tensor,
    pointwise: &Tensor,
    grad_output: &Tensor,
    stride: usize,
    pointwise_groups: usize,
) -> Result<DsGrads> {
    let (_, c, _) = input.dims3()?;
    check_ds(c, pointwise, pointwise_groups)?;
    let mid = conv1d(input, depthwise, stride, c)?;
    let pw = conv1d_backward(&mid, pointwise, grad_output, 1, pointwise_groups)?;
    let dw = conv1d_backward(input, depthwise, &pw.input, stride, c)?;
    Ok(DsGrads { input: dw.input, depthwise: dw.weights, pointwise: pw.weights })
}

fn check_ds(channels: usize, pointwise: &Tensor, groups: usize) -> Result<()> {
    let c_out = pointwise.shape()[0];
    if groups == 0 || !channels.is_multiple_of(groups) || !c_out.is_multiple_of(groups) {
        return Err(Error::config(format!(
            "pointwise channels {channels} -> {c_out} not divisible by {groups} groups"
        )));
    }
    Ok(())
}
