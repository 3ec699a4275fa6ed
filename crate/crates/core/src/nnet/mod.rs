//! Neural-network substrate with exact hand-written gradients.
//!
//! Everything runs in `f64`. The layers cache whatever their backward pass
//! needs during the forward pass and accumulate parameter gradients in
//! place; [`Adam`] consumes them through the [`Tensors`] visitor. There is
//! no generic autodiff: each operation's backward pass is derived by hand
//! and checked against central finite differences (see [`gradcheck`]).

mod adam;
mod crf;
pub mod gradcheck;
mod init;
mod linear;
mod lstm;
mod norm;
mod ops;
mod params;

pub use adam::{Adam, AdamConfig};
pub use crf::CrfParams;
pub use init::{uniform_array1, uniform_array2, xavier_uniform};
pub use linear::Linear;
pub use lstm::{BiLstm, BiLstmCache, LstmParams};
pub use norm::{BatchNorm, BatchNormCache};
pub use ops::{
    apply_dropout_mask, dropout, draw_dropout_mask, max_pool, max_pool_backward, softmax,
    softmax_ce, softmax_ce_backward,
};
pub use params::{
    copy_params_by_name, param_count, param_count_filtered, restore, scoped, snapshot, zero_grads,
    BufferMut, ParamMut, Tensors, P1, P2,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnetError {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("invalid use of {op}: {detail}")]
    Usage { op: &'static str, detail: String },
}

pub type Result<T> = std::result::Result<T, NnetError>;

/// Numerically stable log(sum(exp(xs))).
pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logsumexp_matches_naive_on_small_values() {
        let xs = [0.3f64, -1.2, 2.0, 0.0];
        let naive = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert!((logsumexp(&xs) - naive).abs() < 1e-12);
    }

    #[test]
    fn logsumexp_stable_on_large_values() {
        let xs = [1000.0, 1000.0];
        assert!((logsumexp(&xs) - (1000.0 + 2f64.ln())).abs() < 1e-9);
    }
}
