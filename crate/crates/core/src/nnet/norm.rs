//! Batch normalization over a (batch, features) matrix.
//!
//! Training normalizes with biased batch statistics and maintains running
//! estimates (unbiased variance) for evaluation. Training requires a batch
//! of at least two rows.

use ndarray::{Array1, Array2, Axis};

use super::params::{scoped, BufferMut, ParamMut, Tensors, P1};
use super::{NnetError, Result};

#[derive(Debug, Clone)]
pub struct BatchNorm {
    pub gamma: P1,
    pub beta: P1,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
    pub momentum: f64,
    pub eps: f64,
}

/// Cached batch statistics for the backward pass.
pub struct BatchNormCache {
    x_hat: Array2<f64>,
    inv_std: Array1<f64>,
}

impl BatchNorm {
    pub fn new(features: usize, momentum: f64, eps: f64) -> Self {
        Self {
            gamma: P1::new(Array1::ones(features)),
            beta: P1::new(Array1::zeros(features)),
            running_mean: Array1::zeros(features),
            running_var: Array1::ones(features),
            momentum,
            eps,
        }
    }

    pub fn features(&self) -> usize {
        self.gamma.v.len()
    }

    /// Normalize with batch statistics and update the running estimates.
    pub fn forward_train(&mut self, x: &Array2<f64>) -> Result<(Array2<f64>, BatchNormCache)> {
        let (b, feats) = x.dim();
        if feats != self.features() {
            return Err(NnetError::ShapeMismatch {
                op: "batch_norm",
                detail: format!("{} features vs {}", feats, self.features()),
            });
        }
        if b < 2 {
            return Err(NnetError::Usage {
                op: "batch_norm",
                detail: format!("training batch of size {b} (need >= 2)"),
            });
        }
        let bf = b as f64;
        let mean = x.mean_axis(Axis(0)).expect("nonempty");
        let centered = x - &mean;
        let var = centered.mapv(|v| v * v).sum_axis(Axis(0)) / bf;
        let inv_std = var.mapv(|v| 1.0 / (v + self.eps).sqrt());
        let x_hat = &centered * &inv_std;
        let y = &x_hat * &self.gamma.v + &self.beta.v;

        let unbiased = &var * (bf / (bf - 1.0));
        self.running_mean = &self.running_mean * (1.0 - self.momentum) + &mean * self.momentum;
        self.running_var = &self.running_var * (1.0 - self.momentum) + &unbiased * self.momentum;

        Ok((y, BatchNormCache { x_hat, inv_std }))
    }

    /// Normalize with the stored running statistics (any batch size).
    pub fn forward_eval(&self, x: &Array2<f64>) -> Array2<f64> {
        let inv_std = self.running_var.mapv(|v| 1.0 / (v + self.eps).sqrt());
        let x_hat = (x - &self.running_mean) * &inv_std;
        &x_hat * &self.gamma.v + &self.beta.v
    }

    /// Accumulate gamma/beta gradients and return the input gradient.
    pub fn backward(&mut self, cache: &BatchNormCache, d_out: &Array2<f64>) -> Array2<f64> {
        let b = d_out.nrows() as f64;
        self.gamma.g += &(d_out * &cache.x_hat).sum_axis(Axis(0));
        self.beta.g += &d_out.sum_axis(Axis(0));

        // dx = (gamma * inv_std / B) * (B * dy - sum(dy) - x_hat * sum(dy * x_hat))
        let d_xhat = d_out * &self.gamma.v;
        let sum_dxhat = d_xhat.sum_axis(Axis(0));
        let sum_dxhat_xhat = (&d_xhat * &cache.x_hat).sum_axis(Axis(0));
        let mut dx = d_xhat * b;
        dx -= &sum_dxhat;
        dx -= &(&cache.x_hat * &sum_dxhat_xhat);
        dx *= &(cache.inv_std.mapv(|v| v / b));
        dx
    }
}

impl Tensors for BatchNorm {
    fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(ParamMut<'_>)) {
        self.gamma.visit(&scoped(prefix, "gamma"), f);
        self.beta.visit(&scoped(prefix, "beta"), f);
    }

    fn visit_buffers(&mut self, prefix: &str, f: &mut dyn FnMut(BufferMut<'_>)) {
        f(BufferMut {
            name: scoped(prefix, "running_mean"),
            shape: vec![self.running_mean.len()],
            value: self.running_mean.as_slice_mut().expect("contiguous"),
        });
        f(BufferMut {
            name: scoped(prefix, "running_var"),
            shape: vec![self.running_var.len()],
            value: self.running_var.as_slice_mut().expect("contiguous"),
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn training_output_is_standardized_before_scale_shift() {
        let mut bn = BatchNorm::new(3, 0.1, 1e-5);
        let x = Array2::from_shape_fn((8, 3), |(i, j)| (i as f64 * 1.7 + j as f64) * 0.9 - 2.0);
        let (y, _) = bn.forward_train(&x).unwrap();
        for j in 0..3 {
            let col: Vec<f64> = (0..8).map(|i| y[[i, j]]).collect();
            let mean = col.iter().sum::<f64>() / 8.0;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 8.0;
            assert!(mean.abs() < 1e-5, "mean {mean}");
            assert!((var - 1.0).abs() < 1e-3, "var {var}");
        }
    }

    #[test]
    fn eval_with_frozen_identity_stats_is_identity() {
        let bn = BatchNorm::new(2, 0.1, 1e-5);
        let x = Array2::from_shape_vec((3, 2), vec![1.0, -2.0, 0.5, 4.0, -0.25, 0.0]).unwrap();
        let y = bn.forward_eval(&x);
        for (a, b) in x.iter().zip(y.iter()) {
            assert!((a - b).abs() < 1e-5 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn training_batch_of_one_is_rejected() {
        let mut bn = BatchNorm::new(2, 0.1, 1e-5);
        assert!(bn.forward_train(&Array2::zeros((1, 2))).is_err());
    }
}
