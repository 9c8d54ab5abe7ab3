use alloc::vec::Vec;

use rand::{Rng, RngCore};

use super::Tensor;
use crate::{Error, Result};

/// Per-`(sample, channel)` multipliers: `0` for dropped channels,
/// `1 / (1 - rate)` for survivors.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask {
    pub scales: Vec<f64>,
}

/// Zeroes whole channels with probability `rate` during training;
/// identity otherwise.
pub fn spatial_dropout<R: RngCore>(
    input: &Tensor,
    rate: f64,
    rng: &mut R,
    training: bool,
) -> Result<(Tensor, Option<DropoutMask>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::config("dropout rate must lie in [0, 1)"));
    }
    if !training || rate == 0.0 {
        return Ok((input.clone(), None));
    }
    let (n, c, t) = input.dims3()?;
    let keep = 1.0 / (1.0 - rate);
    let scales: Vec<f64> = (0..n * c).map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep }).collect();
    let mut out = input.clone();
    for (row, s) in out.data_mut().chunks_exact_mut(t).zip(&scales) {
        for v in row {
            *v *= s;
        }
    }
    Ok((out, Some(DropoutMask { scales })))
}

pub fn spatial_dropout_backward(mask: Option<&DropoutMask>, grad_output: &Tensor) -> Result<Tensor> {
    let Some(mask) = mask else {
        return Ok(grad_output.clone());
    };
    let (_, _, t) = grad_output.dims3()?;
    let mut g = grad_output.clone();
    for (row, s) in g.data_mut().chunks_exact_mut(t).zip(&mask.scales) {
        for v in row {
            *v *= s;
        }
    }
    Ok(g)
}
