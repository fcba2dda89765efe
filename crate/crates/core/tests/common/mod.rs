#![allow(dead_code)]

pub mod metrics;
pub mod oracles;
pub mod planted;
pub mod shapes;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `count` series with lengths uniform in 1..=64 and values uniform in [0, 1).
pub fn random_series(seed: u64, count: usize) -> Vec<Vec<f64>> {
    let mut rng = rng(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(1..=64);
            (0..n).map(|_| rng.random::<f64>()).collect()
        })
        .collect()
}
