//! Seeded random streams and log-space categorical sampling.

use rand::{Rng, SeedableRng};

/// The generator used for every stochastic routine. Portable and
/// reproducible across platforms for a given seed.
pub type SeedRng = rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> SeedRng {
    SeedRng::seed_from_u64(seed)
}

/// Derives an independent seed for sub-stream `stream` of `master`
/// (SplitMix64 finalizer over the mixed pair).
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(stream.wrapping_mul(0xd1b5_4a32_d192_ed03));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Samples an index with probability proportional to `exp(log_weights[k])`
/// using the Gumbel-max trick.
pub fn gumbel_max<R: Rng + ?Sized>(log_weights: &[f64], rng: &mut R) -> usize {
    debug_assert!(!log_weights.is_empty());
    let mut best = 0;
    let mut best_key = f64::NEG_INFINITY;
    for (k, &w) in log_weights.iter().enumerate() {
        // u ∈ (0, 1]
        let u = 1.0 - rng.random::<f64>();
        let key = w - libm::log(-libm::log(u));
        if key > best_key {
            best_key = key;
            best = k;
        }
    }
    best
}

/// `log Σ exp(x)`, stable for large magnitudes.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + libm::log(xs.iter().map(|x| libm::exp(x - max)).sum::<f64>())
}

/// Normalizes log weights in place so that they exponentiate to one.
pub fn log_normalize(xs: &mut [f64]) {
    let z = log_sum_exp(xs);
    for x in xs {
        *x -= z;
    }
}
