//! Epoch batch construction: shuffle under the run seed, bucket by length
//! within pools, cut batches, shuffle the batch order.
//!
//! The sentiment task folds a trailing singleton batch into its predecessor
//! because batch norm needs at least two rows; the auxiliary tagging task
//! has no batch norm and keeps exactly ceil(n / batch_size) batches, so no
//! upsampling or resizing ever happens on auxiliary data.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

/// Pool width in batches; length-sorting happens inside each pool so batch
/// composition still varies across epochs.
const POOL_BATCHES: usize = 20;

/// Build index batches for one epoch.
pub fn make_batches(
    lengths: &[usize],
    batch_size: usize,
    rng: &mut ChaCha8Rng,
    merge_trailing_singleton: bool,
) -> Vec<Vec<usize>> {
    assert!(batch_size >= 1, "batch_size must be >= 1");
    let n = lengths.len();
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(rng);

    let mut batches: Vec<Vec<usize>> = Vec::with_capacity(n.div_ceil(batch_size));
    for pool in indices.chunks(POOL_BATCHES * batch_size) {
        let mut pool: Vec<usize> = pool.to_vec();
        pool.sort_by_key(|&i| lengths[i]);
        for chunk in pool.chunks(batch_size) {
            batches.push(chunk.to_vec());
        }
    }
    if merge_trailing_singleton && batches.len() >= 2 {
        if let Some(last) = batches.last() {
            if last.len() == 1 {
                let lone = batches.pop().expect("nonempty");
                batches.last_mut().expect("nonempty").extend(lone);
            }
        }
    }
    batches.shuffle(rng);
    batches
}
