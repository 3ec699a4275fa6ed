//! Parameter initializers.
//!
//! The reference configuration uses Xavier-uniform weight matrices, zero
//! biases with the forget-gate bias set to one, and uniform(-0.1, 0.1) CRF
//! transition scores. The exact scheme is echoed into every run's resolved
//! config so it stays auditable.

use ndarray::{Array1, Array2};
use rand::RngExt;
use rand_chacha::ChaCha8Rng;

/// Xavier/Glorot uniform: limit = sqrt(6 / (fan_in + fan_out)).
pub fn xavier_uniform(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    uniform_array2(rows, cols, limit, rng)
}

/// Matrix with entries drawn uniformly from (-limit, limit).
pub fn uniform_array2(rows: usize, cols: usize, limit: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| rng.random_range(-limit..limit))
        .collect();
    Array2::from_shape_vec((rows, cols), data).expect("shape")
}

/// Vector with entries drawn uniformly from (-limit, limit).
pub fn uniform_array1(len: usize, limit: f64, rng: &mut ChaCha8Rng) -> Array1<f64> {
    Array1::from_iter((0..len).map(|_| rng.random_range(-limit..limit)))
}
