//! TC-ResNet8, SCN and Modified SCN, plus scaled-down variants for desk-scale
//! experiments and finite-difference checks.
//!
//! Full-size layer table (c = output channels, k = kernel, s = stride,
//! g = pointwise groups, p = average-pool window):
//!
//! ```text
//! TC-ResNet8  (input: 40 MFCC x 98 frames, coefficients as channels)
//!   conv c16 k3 s1 -> BN -> ReLU
//!   3 x residual [conv c k9 s2 -> BN -> ReLU -> conv c k9 s1 -> BN]
//!              + [conv c k1 s2 -> BN]  -> ReLU       c = 24, 32, 48
//!   global average pool -> dense 12
//!
//! SCN  (input: 16000 raw samples)
//!   sinc 40 filters k101 s8 (30 Hz - 7.8 kHz, mel-spaced) -> log(|x| + 1)
//!   ds c120 k51 s2 g2 -> BN -> ReLU -> spatial dropout -> avgpool p3
//!   ds c168 k11 s1 g3 -> BN -> ReLU -> spatial dropout -> avgpool p3
//!   ds c168 k11 s1 g2 -> ...
//!   ds c168 k11 s1 g3 -> ...
//!   ds c168 k11 s1 g2 -> ...
//!   global average pool -> dense 12
//!
//! Modified SCN: SCN with pointwise groups 4, 8, 4, 8, 4 and sinc stride 16.
//! ```

use alloc::vec;
use alloc::vec::Vec;

use super::{InputKind, InputSpec, LayerSpec, ModelSpec, SincSpec};
use crate::features::MfccConfig;
use crate::{NUM_CLASSES, SAMPLE_RATE};

/// Channel widths of the first conv and the three residual blocks.
pub const TC_RESNET8_WIDTHS: [usize; 4] = [16, 24, 32, 48];

#[derive(Debug, Clone, PartialEq)]
pub struct TcResNetConfig {
    pub id: &'static str,
    pub input: InputSpec,
    pub widths: [usize; 4],
    pub first_kernel: usize,
    pub block_kernel: usize,
}

impl TcResNetConfig {
    fn mfcc(id: &'static str, widths: [usize; 4]) -> Self {
        let mfcc = MfccConfig::default();
        let input = InputSpec {
            channels: mfcc.num_coefficients,
            length: mfcc.num_frames(SAMPLE_RATE as usize),
            kind: InputKind::Mfcc(mfcc),
        };
        Self { id, input, widths, first_kernel: 3, block_kernel: 9 }
    }
}

impl Default for TcResNetConfig {
    fn default() -> Self {
        Self::mfcc("tc-resnet8", TC_RESNET8_WIDTHS)
    }
}

pub fn tc_resnet8(cfg: &TcResNetConfig) -> ModelSpec {
    let [w0, w1, w2, w3] = cfg.widths;
    let mut layers = vec![
        LayerSpec::Conv { out_channels: w0, kernel: cfg.first_kernel, stride: 1, groups: 1 },
        LayerSpec::BatchNorm,
        LayerSpec::Relu,
    ];
    for c in [w1, w2, w3] {
        layers.push(LayerSpec::Residual {
            body: vec![
                LayerSpec::Conv { out_channels: c, kernel: cfg.block_kernel, stride: 2, groups: 1 },
                LayerSpec::BatchNorm,
                LayerSpec::Relu,
                LayerSpec::Conv { out_channels: c, kernel: cfg.block_kernel, stride: 1, groups: 1 },
                LayerSpec::BatchNorm,
            ],
            shortcut: vec![
                LayerSpec::Conv { out_channels: c, kernel: 1, stride: 2, groups: 1 },
                LayerSpec::BatchNorm,
            ],
        });
        layers.push(LayerSpec::Relu);
    }
    layers.push(LayerSpec::GlobalAvgPool);
    layers.push(LayerSpec::Dense { out_features: NUM_CLASSES });
    ModelSpec { id: cfg.id.into(), input: cfg.input.clone(), layers }
}

pub fn build_tc_resnet8() -> ModelSpec {
    tc_resnet8(&TcResNetConfig::default())
}

/// Desk-scale TC-ResNet8 on the full MFCC front-end.
pub fn micro_tc_resnet8() -> ModelSpec {
    tc_resnet8(&TcResNetConfig::mfcc("micro-tc-resnet8", [8, 8, 12, 16]))
}

/// TC-ResNet8 topology on a `6 x 16` precomputed input for gradient checks.
pub fn tiny_tc_resnet8() -> ModelSpec {
    tc_resnet8(&TcResNetConfig {
        id: "tiny-tc-resnet8",
        input: InputSpec { kind: InputKind::Precomputed, channels: 6, length: 16 },
        widths: [4, 4, 6, 8],
        first_kernel: 3,
        block_kernel: 5,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsBlock {
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub groups: usize,
    pub pool: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScnConfig {
    pub id: &'static str,
    pub input: InputSpec,
    pub sinc: SincSpec,
    pub blocks: Vec<DsBlock>,
    pub dropout: f64,
}

const SCN_GROUPS: [usize; 5] = [2, 3, 2, 3, 2];
const MODIFIED_SCN_GROUPS: [usize; 5] = [4, 8, 4, 8, 4];

impl ScnConfig {
    /// Pointwise groups 4, 8, 4, 8, 4 and twice the sinc stride; nothing else
    /// changes.
    pub fn modified(&self, id: &'static str) -> Self {
        let mut m = self.clone();
        m.id = id;
        m.sinc.stride *= 2;
        for (b, g) in m.blocks.iter_mut().zip(MODIFIED_SCN_GROUPS) {
            b.groups = g;
        }
        m
    }

    fn waveform(samples: usize) -> InputSpec {
        InputSpec { kind: InputKind::Waveform, channels: 1, length: samples }
    }

    fn blocks(channels: [usize; 5], kernels: [usize; 5], first_stride: usize, pool: usize) -> Vec<DsBlock> {
        (0..5)
            .map(|i| DsBlock {
                out_channels: channels[i],
                kernel: kernels[i],
                stride: if i == 0 { first_stride } else { 1 },
                groups: SCN_GROUPS[i],
                pool,
            })
            .collect()
    }
}

impl Default for ScnConfig {
    fn default() -> Self {
        Self {
            id: "scn",
            input: Self::waveform(SAMPLE_RATE as usize),
            sinc: SincSpec {
                filters: 40,
                kernel_length: 101,
                stride: 8,
                sample_rate: SAMPLE_RATE,
                low_hz: 30.0,
                high_hz: 7800.0,
            },
            blocks: Self::blocks([120, 168, 168, 168, 168], [51, 11, 11, 11, 11], 2, 3),
            dropout: 0.1,
        }
    }
}

pub fn scn(cfg: &ScnConfig) -> ModelSpec {
    let mut layers = vec![LayerSpec::Sinc(cfg.sinc.clone()), LayerSpec::LogCompress];
    for b in &cfg.blocks {
        layers.extend([
            LayerSpec::DepthwiseSeparable {
                out_channels: b.out_channels,
                kernel: b.kernel,
                stride: b.stride,
                pointwise_groups: b.groups,
            },
            LayerSpec::BatchNorm,
            LayerSpec::Relu,
            LayerSpec::SpatialDropout { rate: cfg.dropout },
            LayerSpec::AvgPool { window: b.pool, stride: b.pool },
        ]);
    }
    layers.push(LayerSpec::GlobalAvgPool);
    layers.push(LayerSpec::Dense { out_features: NUM_CLASSES });
    ModelSpec { id: cfg.id.into(), input: cfg.input.clone(), layers }
}

pub fn build_scn() -> ModelSpec {
    scn(&ScnConfig::default())
}

pub fn build_modified_scn() -> ModelSpec {
    scn(&ScnConfig::default().modified("scn-mod"))
}

fn micro_scn_config() -> ScnConfig {
    ScnConfig {
        id: "micro-scn",
        input: ScnConfig::waveform(SAMPLE_RATE as usize),
        sinc: SincSpec {
            filters: 8,
            kernel_length: 31,
            stride: 16,
            sample_rate: SAMPLE_RATE,
            low_hz: 30.0,
            high_hz: 7800.0,
        },
        blocks: ScnConfig::blocks([24; 5], [9; 5], 2, 3),
        dropout: 0.1,
    }
}

/// Desk-scale SCN on full one-second waveforms; `modified` applies the
/// Modified SCN changes.
pub fn micro_scn(modified: bool) -> ModelSpec {
    let cfg = micro_scn_config();
    if modified {
        scn(&cfg.modified("micro-scn-mod"))
    } else {
        scn(&cfg)
    }
}

/// SCN topology on a 512-sample waveform for gradient checks.
pub fn tiny_scn(modified: bool) -> ModelSpec {
    let cfg = ScnConfig {
        id: "tiny-scn",
        input: ScnConfig::waveform(512),
        sinc: SincSpec {
            filters: 8,
            kernel_length: 15,
            stride: 4,
            sample_rate: SAMPLE_RATE,
            low_hz: 30.0,
            high_hz: 7800.0,
        },
        blocks: ScnConfig::blocks([24; 5], [5; 5], 2, 2),
        dropout: 0.2,
    };
    if modified {
        scn(&cfg.modified("tiny-scn-mod"))
    } else {
        scn(&cfg)
    }
}
