//! Compiled model graph: flat parameter layout, forward with a tape, and
//! reverse-mode backward through every layer.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use super::{InputKind, InputSpec, LayerSpec, ModelSpec};
use crate::features::MfccExtractor;
use crate::nn::{self, BnCache, BnConfig, BnMode, Cutoffs, DropoutMask, RunningStats, Tensor};
use crate::signal::AudioClip;
use crate::{Error, Result, NUM_CLASSES};

/// Batch-norm behaviour and dropout for one forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ForwardMode {
    /// Batch statistics, dropout active.
    Train,
    /// Running statistics, dropout off.
    FrozenEval,
    /// Statistics of the evaluated batch, dropout off, nothing persisted.
    AdaptiveEval,
}

impl ForwardMode {
    fn bn_mode(self) -> BnMode {
        match self {
            ForwardMode::Train => BnMode::Train,
            ForwardMode::FrozenEval => BnMode::Frozen,
            ForwardMode::AdaptiveEval => BnMode::Adaptive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamKind {
    SincCutoffs,
    ConvWeight,
    DepthwiseWeight,
    PointwiseWeight,
    DenseWeight,
    BnGamma,
    BnBeta,
}

impl ParamKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ParamKind::SincCutoffs => "sinc",
            ParamKind::ConvWeight => "conv",
            ParamKind::DepthwiseWeight => "depthwise",
            ParamKind::PointwiseWeight => "pointwise",
            ParamKind::DenseWeight => "dense",
            ParamKind::BnGamma => "bn_gamma",
            ParamKind::BnBeta => "bn_beta",
        }
    }
}

/// A named region of the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSlice {
    pub name: String,
    pub kind: ParamKind,
    pub offset: usize,
    pub len: usize,
}

/// Complete learnable and running state of one network.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub values: Vec<f64>,
    /// One entry per batch-norm layer, in graph order.
    pub bn: Vec<RunningStats>,
}

#[derive(Debug, Clone)]
enum Node {
    /// Cutoffs are stored in kHz; `scale` is kHz per cycle/sample.
    Sinc { stride: usize, offset: usize, filters: usize, window: Vec<f64>, scale: f64 },
    Conv { out: usize, in_per_group: usize, kernel: usize, stride: usize, groups: usize, offset: usize },
    Ds { c_in: usize, out: usize, kernel: usize, stride: usize, groups: usize, dw: usize, pw: usize },
    Bn { channels: usize, offset: usize, index: usize },
    Relu,
    Log,
    AvgPool { window: usize, stride: usize },
    Dropout { rate: f64 },
    Gap,
    Dense { fan_in: usize, out: usize, offset: usize },
    Residual { body: Vec<Node>, shortcut: Vec<Node> },
}

#[derive(Debug, Clone)]
enum Record {
    Sinc { input: Tensor, kernels: Tensor, cutoffs: Vec<Cutoffs> },
    Conv { input: Tensor },
    Ds { input: Tensor, mid: Tensor },
    Bn { index: usize, cache: BnCache },
    Relu { input: Tensor },
    Log { input: Tensor },
    AvgPool { shape: Vec<usize> },
    Dropout { mask: Option<DropoutMask> },
    Gap { shape: Vec<usize> },
    Dense { input: Tensor },
    Residual { body: Vec<Record>, shortcut: Vec<Record> },
}

/// Activations saved by [`Network::forward`].
#[derive(Debug, Clone)]
pub struct Tape {
    records: Vec<Record>,
    batch: usize,
}

impl Tape {
    /// Batch-norm caches as `(layer index, cache)` in graph order.
    pub fn bn_caches(&self) -> Vec<(usize, &BnCache)> {
        fn collect<'a>(records: &'a [Record], out: &mut Vec<(usize, &'a BnCache)>) {
            for r in records {
                match r {
                    Record::Bn { index, cache } => out.push((*index, cache)),
                    Record::Residual { body, shortcut } => {
                        collect(body, out);
                        collect(shortcut, out);
                    }
                    _ => {}
                }
            }
        }
        let mut out = Vec::new();
        collect(&self.records, &mut out);
        out
    }

    /// Sign pattern of every ReLU input and log-compression input. Two
    /// forwards with equal signatures lie on the same smooth piece of the
    /// network function.
    pub fn kink_signature(&self) -> Vec<bool> {
        fn collect(records: &[Record], out: &mut Vec<bool>) {
            for r in records {
                match r {
                    Record::Relu { input } | Record::Log { input } => {
                        out.extend(input.data().iter().map(|&x| x > 0.0))
                    }
                    Record::Residual { body, shortcut } => {
                        collect(body, out);
                        collect(shortcut, out);
                    }
                    _ => {}
                }
            }
        }
        let mut out = Vec::new();
        collect(&self.records, &mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub params: Vec<f64>,
    pub input: Tensor,
}

/// A [`ModelSpec`] with a fixed layout of its parameters.
#[derive(Debug, Clone)]
pub struct Network {
    spec: ModelSpec,
    nodes: Vec<Node>,
    slices: Vec<ParamSlice>,
    bn_channels: Vec<usize>,
    num_params: usize,
}

struct Layout {
    slices: Vec<ParamSlice>,
    bn_channels: Vec<usize>,
    next: usize,
}

impl Layout {
    fn alloc(&mut self, name: String, kind: ParamKind, len: usize) -> usize {
        let offset = self.next;
        self.slices.push(ParamSlice { name, kind, offset, len });
        self.next += len;
        offset
    }
}

fn compile(layers: &[LayerSpec], mut shape: (usize, usize), prefix: &str, layout: &mut Layout) -> Result<(Vec<Node>, (usize, usize))> {
    let mut nodes = Vec::with_capacity(layers.len());
    for (i, layer) in layers.iter().enumerate() {
        let path = format!("{prefix}{i}.{}", layer.name());
        let next = layer.output_shape(shape)?;
        let (c_in, _) = shape;
        let node = match layer {
            LayerSpec::Sinc(s) => Node::Sinc {
                stride: s.stride,
                filters: s.filters,
                offset: layout.alloc(format!("{path}.cutoffs"), ParamKind::SincCutoffs, 2 * s.filters),
                window: nn::hamming_window(s.kernel_length),
                scale: s.sample_rate as f64 / 1000.0,
            },
            LayerSpec::Conv { out_channels, kernel, stride, groups } => {
                let in_per_group = c_in / groups;
                Node::Conv {
                    out: *out_channels,
                    in_per_group,
                    kernel: *kernel,
                    stride: *stride,
                    groups: *groups,
                    offset: layout.alloc(format!("{path}.weight"), ParamKind::ConvWeight, out_channels * in_per_group * kernel),
                }
            }
            LayerSpec::DepthwiseSeparable { out_channels, kernel, stride, pointwise_groups } => Node::Ds {
                c_in,
                out: *out_channels,
                kernel: *kernel,
                stride: *stride,
                groups: *pointwise_groups,
                dw: layout.alloc(format!("{path}.depthwise"), ParamKind::DepthwiseWeight, c_in * kernel),
                pw: layout.alloc(
                    format!("{path}.pointwise"),
                    ParamKind::PointwiseWeight,
                    out_channels * (c_in / pointwise_groups),
                ),
            },
            LayerSpec::BatchNorm => {
                let offset = layout.alloc(format!("{path}.gamma"), ParamKind::BnGamma, c_in);
                layout.alloc(format!("{path}.beta"), ParamKind::BnBeta, c_in);
                layout.bn_channels.push(c_in);
                Node::Bn { channels: c_in, offset, index: layout.bn_channels.len() - 1 }
            }
            LayerSpec::Relu => Node::Relu,
            LayerSpec::LogCompress => Node::Log,
            LayerSpec::AvgPool { window, stride } => Node::AvgPool { window: *window, stride: *stride },
            LayerSpec::SpatialDropout { rate } => Node::Dropout { rate: *rate },
            LayerSpec::GlobalAvgPool => Node::Gap,
            LayerSpec::Dense { out_features } => Node::Dense {
                fan_in: c_in,
                out: *out_features,
                offset: layout.alloc(format!("{path}.weight"), ParamKind::DenseWeight, c_in * out_features),
            },
            LayerSpec::Residual { body, shortcut } => {
                let (body, _) = compile(body, shape, &format!("{path}.body."), layout)?;
                let (shortcut, _) = compile(shortcut, shape, &format!("{path}.shortcut."), layout)?;
                Node::Residual { body, shortcut }
            }
        };
        nodes.push(node);
        shape = next;
    }
    Ok((nodes, shape))
}

fn weights(params: &[f64], offset: usize, shape: Vec<usize>) -> Result<Tensor> {
    let len = shape.iter().product::<usize>();
    Tensor::new(shape, params[offset..offset + len].to_vec())
}

struct Ctx<'a, R> {
    params: &'a [f64],
    bn: &'a [RunningStats],
    bn_config: BnConfig,
    dropout: bool,
    rng: &'a mut R,
}

fn forward_nodes<R: RngCore>(nodes: &[Node], mut x: Tensor, ctx: &mut Ctx<'_, R>) -> Result<(Tensor, Vec<Record>)> {
    let mut records = Vec::with_capacity(nodes.len());
    for node in nodes {
        let (y, rec) = match node {
            Node::Sinc { stride, offset, filters, window, scale } => {
                let p = &ctx.params[*offset..offset + 2 * filters];
                let cutoffs: Vec<Cutoffs> =
                    p.chunks_exact(2).map(|c| nn::reparameterize(c[0] / scale, c[1] / scale)).collect();
                let mut k = Vec::with_capacity(filters * window.len());
                for c in &cutoffs {
                    k.extend(nn::sinc::windowed(c.f1, c.f2, window));
                }
                let kernels = Tensor::new(vec![*filters, 1, window.len()], k)?;
                let y = nn::conv1d(&x, &kernels, *stride, 1)?;
                (y, Record::Sinc { input: x, kernels, cutoffs })
            }
            Node::Conv { out, in_per_group, kernel, stride, groups, offset } => {
                let w = weights(ctx.params, *offset, vec![*out, *in_per_group, *kernel])?;
                let y = nn::conv1d(&x, &w, *stride, *groups)?;
                (y, Record::Conv { input: x })
            }
            Node::Ds { c_in, out, kernel, stride, groups, dw, pw } => {
                let dwt = weights(ctx.params, *dw, vec![*c_in, 1, *kernel])?;
                let pwt = weights(ctx.params, *pw, vec![*out, c_in / groups, 1])?;
                let mid = nn::conv1d(&x, &dwt, *stride, *c_in)?;
                let y = nn::conv1d(&mid, &pwt, 1, *groups)?;
                (y, Record::Ds { input: x, mid })
            }
            Node::Bn { channels, offset, index } => {
                let gamma = &ctx.params[*offset..offset + channels];
                let beta = &ctx.params[offset + channels..offset + 2 * channels];
                let (y, cache) = nn::batchnorm_forward(&x, gamma, beta, &ctx.bn[*index], &ctx.bn_config)?;
                (y, Record::Bn { index: *index, cache })
            }
            Node::Relu => (nn::relu(&x), Record::Relu { input: x }),
            Node::Log => (nn::log_compress(&x), Record::Log { input: x }),
            Node::AvgPool { window, stride } => {
                let y = nn::avg_pool(&x, *window, *stride)?;
                (y, Record::AvgPool { shape: x.shape().to_vec() })
            }
            Node::Dropout { rate } => {
                let (y, mask) = nn::spatial_dropout(&x, *rate, ctx.rng, ctx.dropout)?;
                (y, Record::Dropout { mask })
            }
            Node::Gap => {
                let y = nn::global_avg_pool(&x)?;
                (y, Record::Gap { shape: x.shape().to_vec() })
            }
            Node::Dense { fan_in, out, offset } => {
                let w = weights(ctx.params, *offset, vec![*out, *fan_in])?;
                let y = nn::dense(&x, &w)?;
                (y, Record::Dense { input: x })
            }
            Node::Residual { body, shortcut } => {
                let (a, body_rec) = forward_nodes(body, x.clone(), ctx)?;
                let (b, short_rec) = forward_nodes(shortcut, x, ctx)?;
                (a.add(&b)?, Record::Residual { body: body_rec, shortcut: short_rec })
            }
        };
        records.push(rec);
        x = y;
    }
    Ok((x, records))
}

fn accumulate(grads: &mut [f64], offset: usize, values: &[f64]) {
    for (g, v) in grads[offset..offset + values.len()].iter_mut().zip(values) {
        *g += v;
    }
}

fn backward_nodes(nodes: &[Node], records: &[Record], mut g: Tensor, params: &[f64], grads: &mut [f64]) -> Result<Tensor> {
    for (node, rec) in nodes.iter().zip(records).rev() {
        g = match (node, rec) {
            (Node::Sinc { stride, offset, window, scale, .. }, Record::Sinc { input, kernels, cutoffs }) => {
                let cg = nn::conv1d_backward(input, kernels, &g, *stride, 1)?;
                let k = window.len();
                for (f, c) in cutoffs.iter().enumerate() {
                    let (d1, d2) = nn::sinc_kernel_grads(c.f1, c.f2, window);
                    let gw = &cg.weights.data()[f * k..(f + 1) * k];
                    let df1: f64 = gw.iter().zip(&d1).map(|(a, b)| a * b).sum();
                    let df2: f64 = gw.iter().zip(&d2).map(|(a, b)| a * b).sum();
                    grads[offset + 2 * f] += (df1 * c.df1_dp1 + df2 * c.df2_dp1) / scale;
                    grads[offset + 2 * f + 1] += df2 * c.df2_dp2 / scale;
                }
                cg.input
            }
            (Node::Conv { out, in_per_group, kernel, stride, groups, offset }, Record::Conv { input }) => {
                let w = weights(params, *offset, vec![*out, *in_per_group, *kernel])?;
                let cg = nn::conv1d_backward(input, &w, &g, *stride, *groups)?;
                accumulate(grads, *offset, cg.weights.data());
                cg.input
            }
            (Node::Ds { c_in, out, kernel, stride, groups, dw, pw }, Record::Ds { input, mid }) => {
                let dwt = weights(params, *dw, vec![*c_in, 1, *kernel])?;
                let pwt = weights(params, *pw, vec![*out, c_in / groups, 1])?;
                let pg = nn::conv1d_backward(mid, &pwt, &g, 1, *groups)?;
                accumulate(grads, *pw, pg.weights.data());
                let dg = nn::conv1d_backward(input, &dwt, &pg.input, *stride, *c_in)?;
                accumulate(grads, *dw, dg.weights.data());
                dg.input
            }
            (Node::Bn { channels, offset, .. }, Record::Bn { cache, .. }) => {
                let gamma = &params[*offset..offset + channels];
                let (dx, dgamma, dbeta) = nn::batchnorm_backward(cache, gamma, &g)?;
                accumulate(grads, *offset, &dgamma);
                accumulate(grads, offset + channels, &dbeta);
                dx
            }
            (Node::Relu, Record::Relu { input }) => nn::relu_backward(input, &g)?,
            (Node::Log, Record::Log { input }) => nn::log_compress_backward(input, &g)?,
            (Node::AvgPool { window, stride }, Record::AvgPool { shape }) => {
                nn::avg_pool_backward(shape, &g, *window, *stride)?
            }
            (Node::Dropout { .. }, Record::Dropout { mask }) => nn::spatial_dropout_backward(mask.as_ref(), &g)?,
            (Node::Gap, Record::Gap { shape }) => nn::global_avg_pool_backward(shape, &g)?,
            (Node::Dense { fan_in, out, offset }, Record::Dense { input }) => {
                let w = weights(params, *offset, vec![*out, *fan_in])?;
                let (dx, dw) = nn::dense_backward(input, &w, &g)?;
                accumulate(grads, *offset, dw.data());
                dx
            }
            (Node::Residual { body, shortcut }, Record::Residual { body: br, shortcut: sr }) => {
                let a = backward_nodes(body, br, g.clone(), params, grads)?;
                let b = backward_nodes(shortcut, sr, g, params, grads)?;
                a.add(&b)?
            }
            _ => return Err(Error::MissingForward),
        };
    }
    Ok(g)
}

impl Network {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        let mut layout = Layout { slices: Vec::new(), bn_channels: Vec::new(), next: 0 };
        let (nodes, _) = compile(&spec.layers, spec.input_shape(), "", &mut layout)?;
        Ok(Self {
            spec: spec.clone(),
            nodes,
            slices: layout.slices,
            bn_channels: layout.bn_channels,
            num_params: layout.next,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn slices(&self) -> &[ParamSlice] {
        &self.slices
    }

    /// Channel count of every batch-norm layer, in graph order.
    pub fn bn_channels(&self) -> &[usize] {
        &self.bn_channels
    }

    /// Kaiming-uniform (fan-in) conv and dense weights, unit gamma, zero
    /// beta, mel-spaced sinc cutoffs, and fresh running statistics.
    pub fn init<R: RngCore>(&self, rng: &mut R) -> Parameters {
        let mut values = vec![0.0; self.num_params];
        fn visit<R: RngCore>(nodes: &[Node], spec_layers: &[LayerSpec], values: &mut [f64], rng: &mut R) {
            for (node, layer) in nodes.iter().zip(spec_layers) {
                let mut kaiming = |offset: usize, len: usize, fan_in: usize, rng: &mut R| {
                    let bound = libm::sqrt(6.0 / fan_in as f64);
                    for v in &mut values[offset..offset + len] {
                        *v = rng.random_range(-bound..bound);
                    }
                };
                match (node, layer) {
                    (Node::Sinc { offset, filters, scale, .. }, LayerSpec::Sinc(s)) => {
                        let pairs = nn::mel_spaced_cutoffs(*filters, s.sample_rate, s.low_hz, s.high_hz);
                        for (i, (f1, f2)) in pairs.into_iter().enumerate() {
                            values[offset + 2 * i] = f1 * scale;
                            values[offset + 2 * i + 1] = f2 * scale;
                        }
                    }
                    (Node::Conv { out, in_per_group, kernel, offset, .. }, _) => {
                        kaiming(*offset, out * in_per_group * kernel, in_per_group * kernel, rng)
                    }
                    (Node::Ds { c_in, out, kernel, groups, dw, pw, .. }, _) => {
                        kaiming(*dw, c_in * kernel, *kernel, rng);
                        kaiming(*pw, out * (c_in / groups), c_in / groups, rng);
                    }
                    (Node::Dense { fan_in, out, offset }, _) => kaiming(*offset, fan_in * out, *fan_in, rng),
                    (Node::Bn { channels, offset, .. }, _) => {
                        values[*offset..offset + channels].fill(1.0);
                    }
                    (Node::Residual { body, shortcut }, LayerSpec::Residual { body: bs, shortcut: ss }) => {
                        visit(body, bs, values, rng);
                        visit(shortcut, ss, values, rng);
                    }
                    _ => {}
                }
            }
        }
        visit(&self.nodes, &self.spec.layers, &mut values, rng);
        let bn = self.bn_channels.iter().map(|&c| RunningStats::new(c)).collect();
        Parameters { values, bn }
    }

    fn check_state(&self, params: &Parameters) -> Result<()> {
        if params.values.len() != self.num_params || params.bn.len() != self.bn_channels.len() {
            return Err(Error::shape(format!(
                "model {} needs {} parameters and {} batch-norm layers, got {} and {}",
                self.spec.id,
                self.num_params,
                self.bn_channels.len(),
                params.values.len(),
                params.bn.len()
            )));
        }
        Ok(())
    }

    /// Forward pass to `[N, 12]` logits. Running statistics are read but
    /// never written; after a train-mode pass fold the batch statistics in
    /// with [`Network::update_running_stats`].
    pub fn forward<R: RngCore>(
        &self,
        params: &Parameters,
        input: &Tensor,
        mode: ForwardMode,
        rng: &mut R,
    ) -> Result<(Tensor, Tape)> {
        self.forward_with(params, input, BnConfig::new(mode.bn_mode()), mode == ForwardMode::Train, rng)
    }

    /// Adaptive evaluation blending batch statistics with running ones at
    /// `weight` (1.0 is full replacement, 0.0 is frozen).
    pub fn forward_adaptive_blend<R: RngCore>(
        &self,
        params: &Parameters,
        input: &Tensor,
        weight: f64,
        rng: &mut R,
    ) -> Result<(Tensor, Tape)> {
        let mut cfg = BnConfig::new(BnMode::Adaptive);
        cfg.adaptation_weight = weight;
        self.forward_with(params, input, cfg, false, rng)
    }

    fn forward_with<R: RngCore>(
        &self,
        params: &Parameters,
        input: &Tensor,
        bn_config: BnConfig,
        dropout: bool,
        rng: &mut R,
    ) -> Result<(Tensor, Tape)> {
        self.check_state(params)?;
        let (n, c, t) = input.dims3()?;
        if (c, t) != self.spec.input_shape() {
            return Err(Error::shape(format!(
                "model {} expects [N, {}, {}], got {:?}",
                self.spec.id,
                self.spec.input.channels,
                self.spec.input.length,
                input.shape()
            )));
        }
        let mut ctx = Ctx { params: &params.values, bn: &params.bn, bn_config, dropout, rng };
        let (y, records) = forward_nodes(&self.nodes, input.clone(), &mut ctx)?;
        let logits = y.reshape(vec![n, NUM_CLASSES])?;
        Ok((logits, Tape { records, batch: n }))
    }

    /// Exact gradients of `sum(grad_logits * logits)` with respect to every
    /// parameter and the input.
    pub fn backward(&self, params: &Parameters, tape: &Tape, grad_logits: &Tensor) -> Result<Gradients> {
        self.check_state(params)?;
        if tape.records.len() != self.nodes.len() {
            return Err(Error::MissingForward);
        }
        let g = grad_logits.clone().reshape(vec![tape.batch, NUM_CLASSES, 1])?;
        let mut grads = vec![0.0; self.num_params];
        let input = backward_nodes(&self.nodes, &tape.records, g, &params.values, &mut grads)?;
        Ok(Gradients { params: grads, input })
    }

    /// Folds train-mode batch statistics from `tape` into `params.bn`.
    pub fn update_running_stats(&self, params: &mut Parameters, tape: &Tape, momentum: f64) {
        for (index, cache) in tape.bn_caches() {
            params.bn[index].update(cache, momentum);
        }
    }
}

/// Turns canonical clips into network input tensors.
#[derive(Debug, Clone)]
pub struct FrontEnd {
    input: InputSpec,
    mfcc: Option<MfccExtractor>,
}

impl FrontEnd {
    pub fn new(input: &InputSpec) -> Result<Self> {
        let mfcc = match &input.kind {
            InputKind::Mfcc(cfg) => Some(MfccExtractor::new(cfg.clone())?),
            _ => None,
        };
        Ok(Self { input: input.clone(), mfcc })
    }

    /// Features of one clip, channel-major `[channels * length]`.
    pub fn features(&self, clip: &AudioClip) -> Result<Vec<f64>> {
        let out = match (&self.input.kind, &self.mfcc) {
            (InputKind::Mfcc(_), Some(ex)) => ex.extract(clip)?.to_channel_major(),
            (InputKind::Waveform, _) => clip.samples.clone(),
            _ => return Err(Error::config("model input is precomputed; clips cannot be featurized")),
        };
        if out.len() != self.input.channels * self.input.length {
            return Err(Error::shape(format!(
                "features have {} values, model expects {} x {}",
                out.len(),
                self.input.channels,
                self.input.length
            )));
        }
        Ok(out)
    }

    pub fn batch<'a>(&self, clips: impl IntoIterator<Item = &'a AudioClip>) -> Result<Tensor> {
        let mut data = Vec::new();
        let mut n = 0;
        for clip in clips {
            data.extend(self.features(clip)?);
            n += 1;
        }
        if n == 0 {
            return Err(Error::EmptyBuffer);
        }
        Tensor::new(vec![n, self.input.channels, self.input.length], data)
    }
}
