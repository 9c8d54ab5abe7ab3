use alloc::format;
use alloc::vec;

use super::Tensor;
use crate::{Error, Result};

/// `[N, F, 1] x weights [O, F] -> [N, O, 1]`, no bias.
pub fn dense(input: &Tensor, weights: &Tensor) -> Result<Tensor> {
    let (n, f, t) = input.dims3()?;
    let (o, wf) = (weights.shape()[0], weights.shape()[1]);
    if t != 1 || wf != f {
        return Err(Error::shape(format!("dense expects [N, {wf}, 1], got {:?}", input.shape())));
    }
    let x = input.data();
    let w = weights.data();
    let mut out = vec![0.0; n * o];
    for b in 0..n {
        for j in 0..o {
            out[b * o + j] = w[j * f..][..f].iter().zip(&x[b * f..][..f]).map(|(a, b)| a * b).sum();
        }
    }
    Tensor::new(vec![n, o, 1], out)
}

/// Returns `(grad_input, grad_weights)`.
pub fn dense_backward(input: &Tensor, weights: &Tensor, grad_output: &Tensor) -> Result<(Tensor, Tensor)> {
    let (n, f, _) = input.dims3()?;
    let o = weights.shape()[0];
    let x = input.data();
    let w = weights.data();
    let gy = grad_output.data();
    let mut gx = vec![0.0; n * f];
    let mut gw = vec![0.0; o * f];
    for b in 0..n {
        for j in 0..o {
            let g = gy[b * o + j];
            for i in 0..f {
                gx[b * f + i] += w[j * f + i] * g;
                gw[j * f + i] += x[b * f + i] * g;
            }
        }
    }
    Ok((Tensor::new(input.shape().to_vec(), gx)?, Tensor::new(weights.shape().to_vec(), gw)?))
}
