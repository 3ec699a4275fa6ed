//! Affine projection y = W x + b.

use ndarray::{Array1, Array2, Axis};
use rand_chacha::ChaCha8Rng;

use super::init::xavier_uniform;
use super::params::{scoped, ParamMut, Tensors, P1, P2};

#[derive(Debug, Clone)]
pub struct Linear {
    /// (out, in)
    pub w: P2,
    pub b: P1,
}

impl Linear {
    pub fn new(input: usize, output: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            w: P2::new(xavier_uniform(output, input, rng)),
            b: P1::new(Array1::zeros(output)),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w.v.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.w.v.nrows()
    }

    pub fn forward(&self, x: &Array1<f64>) -> Array1<f64> {
        self.w.v.dot(x) + &self.b.v
    }

    /// Row-wise projection of a (n, in) sequence to (n, out).
    pub fn forward_seq(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut y = x.dot(&self.w.v.t());
        y += &self.b.v;
        y
    }

    /// Accumulate parameter gradients and return the input gradient.
    pub fn backward_seq(&mut self, x: &Array2<f64>, d_out: &Array2<f64>) -> Array2<f64> {
        self.w.g += &d_out.t().dot(x);
        self.b.g += &d_out.sum_axis(Axis(0));
        d_out.dot(&self.w.v)
    }
}

impl Tensors for Linear {
    fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(ParamMut<'_>)) {
        self.w.visit(&scoped(prefix, "w"), f);
        self.b.visit(&scoped(prefix, "b"), f);
    }
}
