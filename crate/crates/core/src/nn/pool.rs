use alloc::format;
use alloc::vec;

use super::Tensor;
use crate::{Error, Result};

/// Mean over windows of `window` samples taken every `stride` samples;
/// `T_out = floor((T - window) / stride) + 1`.
pub fn avg_pool(input: &Tensor, window: usize, stride: usize) -> Result<Tensor> {
    let (n, c, t) = input.dims3()?;
    if window == 0 || stride == 0 {
        return Err(Error::config("pooling window and stride must be positive"));
    }
    if window > t {
        return Err(Error::shape(format!("pooling window {window} exceeds length {t}")));
    }
    let t_out = (t - window) / stride + 1;
    let x = input.data();
    let mut out = vec![0.0; n * c * t_out];
    let scale = 1.0 / window as f64;
    for row in 0..n * c {
        let xs = &x[row * t..][..t];
        for (j, y) in out[row * t_out..][..t_out].iter_mut().enumerate() {
            *y = xs[j * stride..j * stride + window].iter().sum::<f64>() * scale;
        }
    }
    Tensor::new(vec![n, c, t_out], out)
}

pub fn avg_pool_backward(input_shape: &[usize], grad_output: &Tensor, window: usize, stride: usize) -> Result<Tensor> {
    let (n, c, t_out) = grad_output.dims3()?;
    let t = input_shape[2];
    let gy = grad_output.data();
    let mut gx = vec![0.0; n * c * t];
    let scale = 1.0 / window as f64;
    for row in 0..n * c {
        for j in 0..t_out {
            let g = gy[row * t_out + j] * scale;
            for v in &mut gx[row * t + j * stride..][..window] {
                *v += g;
            }
        }
    }
    Tensor::new(input_shape.to_vec(), gx)
}

/// Mean over the whole time axis: `[N, C, T] -> [N, C, 1]`.
pub fn global_avg_pool(input: &Tensor) -> Result<Tensor> {
    let (n, c, t) = input.dims3()?;
    let data = input.data().chunks_exact(t).map(|r| r.iter().sum::<f64>() / t as f64).collect();
    Tensor::new(vec![n, c, 1], data)
}

pub fn global_avg_pool_backward(input_shape: &[usize], grad_output: &Tensor) -> Result<Tensor> {
    let t = input_shape[2];
    let mut gx = vec![0.0; grad_output.len() * t];
    for (row, g) in gx.chunks_exact_mut(t).zip(grad_output.data()) {
        row.fill(g / t as f64);
    }
    Tensor::new(input_shape.to_vec(), gx)
}
