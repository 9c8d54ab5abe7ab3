use alloc::vec::Vec;

use super::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CrossEntropy {
    /// Mean negative log-likelihood over the batch.
    pub loss: f64,
    /// Row-wise softmax, `[N, K]`.
    pub probabilities: Tensor,
    /// d loss / d logits, `[N, K]`.
    pub grad_logits: Tensor,
}

/// Max-subtracted softmax followed by mean negative log-likelihood.
pub fn softmax_cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<CrossEntropy> {
    let (n, k) = match logits.shape()[..] {
        [n, k] => (n, k),
        [n, k, 1] => (n, k),
        _ => return Err(Error::shape("logits must be [N, K]")),
    };
    if labels.len() != n {
        return Err(Error::shape("one label per logit row"));
    }
    let mut probs = Vec::with_capacity(n * k);
    let mut loss = 0.0;
    for (row, &label) in logits.data().chunks_exact(k).zip(labels) {
        if label >= k {
            return Err(Error::Label { label, classes: k });
        }
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|z| libm::exp(z - max)).sum();
        let log_sum = libm::log(sum);
        loss -= row[label] - max - log_sum;
        probs.extend(row.iter().map(|z| libm::exp(z - max - log_sum)));
    }
    let mut grad = probs.clone();
    for (b, &label) in labels.iter().enumerate() {
        grad[b * k + label] -= 1.0;
    }
    for g in &mut grad {
        *g /= n as f64;
    }
    Ok(CrossEntropy {
        loss: loss / n as f64,
        probabilities: Tensor::new(alloc::vec![n, k], probs)?,
        grad_logits: Tensor::new(alloc::vec![n, k], grad)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn uniform_logits_give_log_k() {
        let ce = softmax_cross_entropy(&Tensor::zeros(vec![3, 12]), &[0, 5, 11]).unwrap();
        assert!((ce.loss - libm::log(12.0)).abs() < 1e-12);
        assert!((ce.loss - 2.4849).abs() < 1e-4);
        for row in ce.probabilities.data().chunks_exact(12) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn confident_correct_logit_gives_zero_loss() {
        let mut z = vec![0.0; 12];
        z[4] = 1e3;
        let ce = softmax_cross_entropy(&Tensor::new(vec![1, 12], z).unwrap(), &[4]).unwrap();
        assert!(ce.loss.abs() < 1e-12);
    }

    #[test]
    fn out_of_range_label() {
        assert_eq!(
            softmax_cross_entropy(&Tensor::zeros(vec![1, 12]), &[12]).unwrap_err(),
            Error::Label { label: 12, classes: 12 }
        );
    }
}
