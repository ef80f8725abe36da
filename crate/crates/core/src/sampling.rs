//! Seeded sampling without replacement.
//!
//! Generator: ChaCha8 from `rand_chacha` 0.9, seeded with
//! `SeedableRng::seed_from_u64`. Selection is a partial Fisher-Yates shuffle
//! over `0..n`: step `i` draws `j` uniformly from `i..n` with
//! `Rng::random_range` and swaps positions `i` and `j`; the first `size`
//! positions are the sample, in draw order.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Name written into report headers so external tools can mirror the draw.
pub const PRNG_NAME: &str = "chacha8-seed_from_u64/partial-fisher-yates";

pub fn sample_indices(n: usize, size: usize, seed: u64) -> Result<Vec<usize>> {
    if size > n {
        return Err(Error::SampleTooLarge { size, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slots: Vec<usize> = (0..n).collect();
    for i in 0..size {
        let j = rng.random_range(i..n);
        slots.swap(i, j);
    }
    slots.truncate(size);
    Ok(slots)
}
