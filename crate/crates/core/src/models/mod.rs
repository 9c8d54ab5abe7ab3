//! Declarative model graphs, the three architectures, and parameter/MAC
//! accounting.
//!
//! A [`ModelSpec`] is a list of [`LayerSpec`]s over `[channels, time]`
//! activations. Shapes, parameter counts, MAC counts and the compiled
//! [`Network`] all derive from it.

mod accounting;
mod builders;
mod checkpoint;
mod network;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

pub use accounting::{count_macs, count_params, layer_costs, sinc_macs, CostKind, LayerCost};
pub use builders::{
    build_modified_scn, build_scn, build_tc_resnet8, micro_scn, micro_tc_resnet8, scn, tc_resnet8,
    tiny_scn, tiny_tc_resnet8, DsBlock, ScnConfig, TcResNetConfig, TC_RESNET8_WIDTHS,
};
pub use checkpoint::{Checkpoint, TrainingMetadata};
pub use network::{
    ForwardMode, FrontEnd, Gradients, Network, ParamKind, ParamSlice, Parameters, Tape,
};

use crate::features::MfccConfig;
use crate::nn::conv_output_len;
use crate::{Error, Result, NUM_CLASSES};

/// How clips become the network input.
#[derive(Debug, Clone, PartialEq)]
pub enum InputKind {
    /// `[1, samples]` raw waveform.
    Waveform,
    /// `[coefficients, frames]` MFCC map.
    Mfcc(MfccConfig),
    /// Input tensors supplied directly; used by gradient checks.
    Precomputed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputSpec {
    pub kind: InputKind,
    pub channels: usize,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SincSpec {
    pub filters: usize,
    pub kernel_length: usize,
    pub stride: usize,
    pub sample_rate: u32,
    pub low_hz: f64,
    pub high_hz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    Sinc(SincSpec),
    Conv { out_channels: usize, kernel: usize, stride: usize, groups: usize },
    DepthwiseSeparable { out_channels: usize, kernel: usize, stride: usize, pointwise_groups: usize },
    BatchNorm,
    Relu,
    LogCompress,
    AvgPool { window: usize, stride: usize },
    SpatialDropout { rate: f64 },
    GlobalAvgPool,
    Dense { out_features: usize },
    /// `body(x) + shortcut(x)`; an empty shortcut is the identity.
    Residual { body: Vec<LayerSpec>, shortcut: Vec<LayerSpec> },
}

impl LayerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::Sinc(_) => "sinc",
            LayerSpec::Conv { .. } => "conv",
            LayerSpec::DepthwiseSeparable { .. } => "ds",
            LayerSpec::BatchNorm => "bn",
            LayerSpec::Relu => "relu",
            LayerSpec::LogCompress => "log",
            LayerSpec::AvgPool { .. } => "avgpool",
            LayerSpec::SpatialDropout { .. } => "dropout",
            LayerSpec::GlobalAvgPool => "gap",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Residual { .. } => "residual",
        }
    }

    /// `(channels, time)` after this layer.
    pub fn output_shape(&self, (c, t): (usize, usize)) -> Result<(usize, usize)> {
        let divisible = |what: &str, ch: usize, g: usize| {
            if g == 0 || !ch.is_multiple_of(g) {
                Err(Error::config(format!("{what}: {ch} channels not divisible by {g} groups")))
            } else {
                Ok(())
            }
        };
        Ok(match self {
            LayerSpec::Sinc(s) => {
                if c != 1 {
                    return Err(Error::config("sinc layer expects a single input channel"));
                }
                if s.kernel_length % 2 == 0 {
                    return Err(Error::config("sinc kernel length must be odd"));
                }
                (s.filters, conv_output_len(t, s.stride))
            }
            LayerSpec::Conv { out_channels, stride, groups, .. } => {
                divisible("conv input", c, *groups)?;
                divisible("conv output", *out_channels, *groups)?;
                (*out_channels, conv_output_len(t, *stride))
            }
            LayerSpec::DepthwiseSeparable { out_channels, stride, pointwise_groups, .. } => {
                divisible("pointwise input", c, *pointwise_groups)?;
                divisible("pointwise output", *out_channels, *pointwise_groups)?;
                (*out_channels, conv_output_len(t, *stride))
            }
            LayerSpec::BatchNorm | LayerSpec::Relu | LayerSpec::LogCompress => (c, t),
            LayerSpec::SpatialDropout { rate } => {
                if !(0.0..1.0).contains(rate) {
                    return Err(Error::config("dropout rate must lie in [0, 1)"));
                }
                (c, t)
            }
            LayerSpec::AvgPool { window, stride } => {
                if *window > t || *window == 0 || *stride == 0 {
                    return Err(Error::shape(format!("pooling window {window} over length {t}")));
                }
                (c, (t - window) / stride + 1)
            }
            LayerSpec::GlobalAvgPool => (c, 1),
            LayerSpec::Dense { out_features } => {
                if t != 1 {
                    return Err(Error::shape("dense layer needs a pooled [C, 1] input"));
                }
                (*out_features, 1)
            }
            LayerSpec::Residual { body, shortcut } => {
                let a = chain_shape(body, (c, t))?;
                let b = chain_shape(shortcut, (c, t))?;
                if a != b {
                    return Err(Error::shape(format!("residual branches disagree: {a:?} vs {b:?}")));
                }
                a
            }
        })
    }
}

pub(crate) fn chain_shape(layers: &[LayerSpec], mut shape: (usize, usize)) -> Result<(usize, usize)> {
    for l in layers {
        shape = l.output_shape(shape)?;
    }
    Ok(shape)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub id: String,
    pub input: InputSpec,
    pub layers: Vec<LayerSpec>,
}

impl ModelSpec {
    /// Checks that every layer composes and the head emits 12 logits.
    pub fn validate(&self) -> Result<()> {
        let out = chain_shape(&self.layers, (self.input.channels, self.input.length))?;
        if out != (NUM_CLASSES, 1) {
            return Err(Error::config(format!("model emits {out:?}, expected ({NUM_CLASSES}, 1)")));
        }
        Ok(())
    }

    pub fn input_shape(&self) -> (usize, usize) {
        (self.input.channels, self.input.length)
    }
}

/// Registered architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelId {
    TcResNet8,
    Scn,
    ScnMod,
    MicroTcResNet8,
    MicroScn,
    MicroScnMod,
}

impl ModelId {
    pub const ALL: [ModelId; 6] = [
        ModelId::TcResNet8,
        ModelId::Scn,
        ModelId::ScnMod,
        ModelId::MicroTcResNet8,
        ModelId::MicroScn,
        ModelId::MicroScnMod,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::TcResNet8 => "tc-resnet8",
            ModelId::Scn => "scn",
            ModelId::ScnMod => "scn-mod",
            ModelId::MicroTcResNet8 => "micro-tc-resnet8",
            ModelId::MicroScn => "micro-scn",
            ModelId::MicroScnMod => "micro-scn-mod",
        }
    }

    pub fn spec(self) -> ModelSpec {
        match self {
            ModelId::TcResNet8 => build_tc_resnet8(),
            ModelId::Scn => build_scn(),
            ModelId::ScnMod => build_modified_scn(),
            ModelId::MicroTcResNet8 => micro_tc_resnet8(),
            ModelId::MicroScn => micro_scn(false),
            ModelId::MicroScnMod => micro_scn(true),
        }
    }

    pub fn valid_ids() -> String {
        let names: Vec<&str> = Self::ALL.iter().map(|m| m.as_str()).collect();
        names.join(", ")
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::UnknownModel(s.into()))
    }
}
