//! Parameter and multiply-accumulate counting.
//!
//! Convention: one MAC is one multiply plus one accumulate. A convolution
//! costs `C_out * T_out * (C_in / groups) * K`, a dense layer
//! `fan_in * fan_out`; normalization, activations and pooling cost nothing.
//! Learnable scalars are conv/dense weights, batch-norm gamma and beta, and
//! two cutoffs per sinc filter.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{LayerSpec, ModelSpec};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostKind {
    Sinc,
    Conv,
    DepthwiseSeparable,
    BatchNorm,
    Dense,
    Free,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerCost {
    pub path: String,
    pub kind: CostKind,
    pub params: u64,
    pub macs: u64,
}

/// Per-layer costs in graph order, residual branches flattened.
pub fn layer_costs(spec: &ModelSpec) -> Result<Vec<LayerCost>> {
    let mut out = Vec::new();
    walk(&spec.layers, spec.input_shape(), "", &mut out)?;
    Ok(out)
}

fn walk(layers: &[LayerSpec], mut shape: (usize, usize), prefix: &str, out: &mut Vec<LayerCost>) -> Result<(usize, usize)> {
    for (i, layer) in layers.iter().enumerate() {
        let path = format!("{prefix}{i}.{}", layer.name());
        let (c_in, _) = shape;
        let next = layer.output_shape(shape)?;
        let (c_out, t_out) = next;
        let (kind, params, macs) = match layer {
            LayerSpec::Sinc(s) => (CostKind::Sinc, 2 * s.filters, s.filters * t_out * s.kernel_length),
            LayerSpec::Conv { kernel, groups, .. } => {
                let w = c_out * (c_in / groups) * kernel;
                (CostKind::Conv, w, w * t_out)
            }
            LayerSpec::DepthwiseSeparable { kernel, pointwise_groups, .. } => {
                let dw = c_in * kernel;
                let pw = c_out * (c_in / pointwise_groups);
                (CostKind::DepthwiseSeparable, dw + pw, (dw + pw) * t_out)
            }
            LayerSpec::BatchNorm => (CostKind::BatchNorm, 2 * c_in, 0),
            LayerSpec::Dense { out_features } => (CostKind::Dense, c_in * out_features, c_in * out_features),
            LayerSpec::Residual { body, shortcut } => {
                walk(body, shape, &format!("{path}.body."), out)?;
                walk(shortcut, shape, &format!("{path}.shortcut."), out)?;
                shape = next;
                continue;
            }
            _ => (CostKind::Free, 0, 0),
        };
        out.push(LayerCost { path, kind, params: params as u64, macs: macs as u64 });
        shape = next;
    }
    Ok(shape)
}

pub fn count_params(spec: &ModelSpec) -> Result<u64> {
    Ok(layer_costs(spec)?.iter().map(|c| c.params).sum())
}

/// MACs for one input of `input_shape = (channels, time)`.
pub fn count_macs(spec: &ModelSpec, input_shape: (usize, usize)) -> Result<u64> {
    let mut s = spec.clone();
    s.input.channels = input_shape.0;
    s.input.length = input_shape.1;
    Ok(layer_costs(&s)?.iter().map(|c| c.macs).sum())
}

/// MACs spent in sinc layers.
pub fn sinc_macs(spec: &ModelSpec) -> Result<u64> {
    Ok(layer_costs(spec)?.iter().filter(|c| c.kind == CostKind::Sinc).map(|c| c.macs).sum())
}
