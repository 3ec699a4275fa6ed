//! Pointwise and pooling operations: masked max pooling, softmax
//! cross-entropy, and inverted dropout.

use ndarray::{Array1, Array2};
use rand::RngExt;
use rand_chacha::ChaCha8Rng;

use super::{logsumexp, NnetError, Result};

/// Elementwise maximum over unmasked rows of a (n, d) sequence. Masked rows
/// are treated as -inf. Returns the pooled vector and the argmax row per
/// feature (earliest row wins ties, which also routes the backward pass).
pub fn max_pool(seq: &Array2<f64>, mask: &[bool]) -> Result<(Array1<f64>, Vec<usize>)> {
    let (n, d) = seq.dim();
    if mask.len() != n {
        return Err(NnetError::ShapeMismatch {
            op: "max_pool",
            detail: format!("mask length {} vs {} rows", mask.len(), n),
        });
    }
    if !mask.iter().any(|&m| m) {
        return Err(NnetError::Usage {
            op: "max_pool",
            detail: "fully masked sequence".to_string(),
        });
    }
    let mut out = Array1::from_elem(d, f64::NEG_INFINITY);
    let mut argmax = vec![usize::MAX; d];
    for t in 0..n {
        if !mask[t] {
            continue;
        }
        for j in 0..d {
            let v = seq[[t, j]];
            if v > out[j] {
                out[j] = v;
                argmax[j] = t;
            }
        }
    }
    Ok((out, argmax))
}

/// Route the pooled gradient back to the rows that won the max.
pub fn max_pool_backward(d_out: &Array1<f64>, argmax: &[usize], rows: usize) -> Array2<f64> {
    let mut d_seq = Array2::zeros((rows, d_out.len()));
    for (j, &t) in argmax.iter().enumerate() {
        d_seq[[t, j]] += d_out[j];
    }
    d_seq
}

/// Softmax over a logit vector.
pub fn softmax(logits: &Array1<f64>) -> Array1<f64> {
    let z = logsumexp(logits.as_slice().expect("contiguous"));
    logits.mapv(|v| (v - z).exp())
}

/// Cross-entropy loss -log softmax(logits)[gold]; returns (loss, probs).
pub fn softmax_ce(logits: &Array1<f64>, gold: usize) -> Result<(f64, Array1<f64>)> {
    if gold >= logits.len() {
        return Err(NnetError::Usage {
            op: "softmax_ce",
            detail: format!("gold class {} out of range {}", gold, logits.len()),
        });
    }
    let z = logsumexp(logits.as_slice().expect("contiguous"));
    let loss = z - logits[gold];
    let probs = logits.mapv(|v| (v - z).exp());
    Ok((loss, probs))
}

/// Gradient of [`softmax_ce`] with respect to the logits.
pub fn softmax_ce_backward(probs: &Array1<f64>, gold: usize) -> Array1<f64> {
    let mut d = probs.clone();
    d[gold] -= 1.0;
    d
}

/// Draw an inverted-dropout mask: entries are 0 with probability `rate` and
/// 1/(1-rate) otherwise. `rate == 0` yields all ones without consuming any
/// randomness.
pub fn draw_dropout_mask(
    rows: usize,
    cols: usize,
    rate: f64,
    rng: &mut ChaCha8Rng,
) -> Array2<f64> {
    assert!((0.0..1.0).contains(&rate), "dropout rate must be in [0, 1)");
    if rate == 0.0 {
        return Array2::ones((rows, cols));
    }
    let scale = 1.0 / (1.0 - rate);
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| if rng.random_bool(rate) { 0.0 } else { scale })
        .collect();
    Array2::from_shape_vec((rows, cols), data).expect("shape")
}

/// Elementwise product with a dropout mask (also its own backward pass).
pub fn apply_dropout_mask(x: &Array2<f64>, mask: &Array2<f64>) -> Array2<f64> {
    x * mask
}

/// Inverted dropout: identity at evaluation, mask-and-rescale in training.
pub fn dropout(x: &Array2<f64>, rate: f64, training: bool, rng: &mut ChaCha8Rng) -> Array2<f64> {
    if !training || rate == 0.0 {
        return x.clone();
    }
    let mask = draw_dropout_mask(x.nrows(), x.ncols(), rate, rng);
    apply_dropout_mask(x, &mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn max_pool_single_vector_is_identity() {
        let seq = Array2::from_shape_vec((1, 3), vec![0.5, -1.0, 2.0]).unwrap();
        let (out, argmax) = max_pool(&seq, &[true]).unwrap();
        assert_eq!(out.to_vec(), vec![0.5, -1.0, 2.0]);
        assert_eq!(argmax, vec![0, 0, 0]);
    }

    #[test]
    fn max_pool_is_order_free_and_padding_free() {
        let seq = Array2::from_shape_vec((3, 2), vec![0.1, 5.0, 2.0, -1.0, 0.3, 0.2]).unwrap();
        let (out, _) = max_pool(&seq, &[true; 3]).unwrap();

        let perm = Array2::from_shape_vec((3, 2), vec![0.3, 0.2, 0.1, 5.0, 2.0, -1.0]).unwrap();
        let (out_perm, _) = max_pool(&perm, &[true; 3]).unwrap();
        assert_eq!(out, out_perm);

        let mut padded = Array2::from_elem((5, 2), 99.0);
        padded.slice_mut(ndarray::s![0..3, ..]).assign(&seq);
        let (out_pad, _) = max_pool(&padded, &[true, true, true, false, false]).unwrap();
        assert_eq!(out, out_pad);
    }

    #[test]
    fn max_pool_rejects_fully_masked() {
        let seq = Array2::zeros((2, 2));
        assert!(max_pool(&seq, &[false, false]).is_err());
    }

    #[test]
    fn uniform_logits_give_log_k_loss() {
        for k in [2usize, 3, 5] {
            let logits = Array1::zeros(k);
            let (loss, probs) = softmax_ce(&logits, 0).unwrap();
            assert!((loss - (k as f64).ln()).abs() < 1e-12);
            assert!((probs.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn confident_gold_logit_drives_loss_to_zero() {
        let mut logits = Array1::zeros(4);
        logits[2] = 50.0;
        let (loss, _) = softmax_ce(&logits, 2).unwrap();
        assert!(loss < 1e-20);
    }

    #[test]
    fn softmax_ce_rejects_out_of_range_gold() {
        assert!(softmax_ce(&Array1::zeros(3), 3).is_err());
    }

    #[test]
    fn dropout_identity_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = Array2::from_shape_fn((4, 5), |(i, j)| (i + j) as f64);
        assert_eq!(dropout(&x, 0.0, true, &mut rng), x);
        assert_eq!(dropout(&x, 0.7, false, &mut rng), x);
    }

    #[test]
    fn dropout_keep_fraction_close_to_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mask = draw_dropout_mask(1000, 1000, 0.3, &mut rng);
        let kept = mask.iter().filter(|&&v| v != 0.0).count() as f64 / 1e6;
        assert!((kept - 0.7).abs() < 0.01, "kept fraction {kept}");
        // kept entries carry the inverse keep probability
        let nonzero = mask.iter().find(|&&v| v != 0.0).unwrap();
        assert!((nonzero - 1.0 / 0.7).abs() < 1e-12);
    }

    #[test]
    fn dropout_reproducible_for_seed_and_call_order() {
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        let m1 = draw_dropout_mask(7, 3, 0.5, &mut a);
        let m2 = draw_dropout_mask(5, 4, 0.5, &mut a);
        assert_eq!(m1, draw_dropout_mask(7, 3, 0.5, &mut b));
        assert_eq!(m2, draw_dropout_mask(5, 4, 0.5, &mut b));
    }
}
