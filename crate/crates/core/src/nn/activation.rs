use super::Tensor;
use crate::Result;

pub fn relu(input: &Tensor) -> Tensor {
    input.map(|x| x.max(0.0))
}

/// Passes gradient where the forward input was strictly positive.
pub fn relu_backward(input: &Tensor, grad_output: &Tensor) -> Result<Tensor> {
    let data = input.data().iter().zip(grad_output.data()).map(|(&x, &g)| if x > 0.0 { g } else { 0.0 }).collect();
    Tensor::new(input.shape().to_vec(), data)
}

/// `log(|x| + 1)`.
pub fn log_compress(input: &Tensor) -> Tensor {
    input.map(|x| libm::log1p(x.abs()))
}

/// `sign(x) / (1 + |x|)`, taking 0 at the kink `x = 0`.
pub fn log_compress_backward(input: &Tensor, grad_output: &Tensor) -> Result<Tensor> {
    let data = input
        .data()
        .iter()
        .zip(grad_output.data())
        .map(|(&x, &g)| {
            if x == 0.0 {
                0.0
            } else {
                g * x.signum() / (1.0 + x.abs())
            }
        })
        .collect();
    Tensor::new(input.shape().to_vec(), data)
}
