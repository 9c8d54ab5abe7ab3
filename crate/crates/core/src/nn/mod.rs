//! Dense tensors and the layer kernels used by the three architectures.
//!
//! Activations are `[batch, channels, time]`. Every kernel has a forward
//! function and an analytic backward returning input and parameter
//! gradients; the model graph in [`crate::models`] composes them.

mod activation;
mod batchnorm;
mod conv;
mod dense;
mod dropout;
mod loss;
mod pool;
pub(crate) mod sinc;
mod tensor;

pub use activation::{log_compress, log_compress_backward, relu, relu_backward};
pub use batchnorm::{
    batchnorm_backward, batchnorm_forward, BatchNormState, BnCache, BnConfig, BnMode,
    RunningStats, BN_EPSILON, BN_MOMENTUM,
};
pub use conv::{
    conv1d, conv1d_backward, conv_output_len, depthwise_separable,
    depthwise_separable_backward, same_padding, ConvGrads, DsGrads,
};
pub use dense::{dense, dense_backward};
pub use dropout::{spatial_dropout, spatial_dropout_backward, DropoutMask};
pub use loss::{softmax_cross_entropy, CrossEntropy};
pub use pool::{avg_pool, avg_pool_backward, global_avg_pool, global_avg_pool_backward};
pub use sinc::{
    hamming_window, mel_spaced_cutoffs, reparameterize, sinc_kernel, sinc_kernel_grads, Cutoffs, SincFilterBank,
    MIN_BAND,
};
pub use tensor::Tensor;
