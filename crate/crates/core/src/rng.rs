//! Seeded random streams.
//!
//! Every stochastic routine takes an explicit seed. Child streams for agents,
//! runs, or bootstrap replicates come from [`derive_seed`], a splittable
//! counter scheme: the child seed for index `i` is the SplitMix64 finalizer
//! applied to `seed + (i + 1) * 0x9E37_79B9_7F4A_7C15`. Children are therefore
//! independent of evaluation order, so work can be split across threads
//! without changing results.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of child stream `index` under `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw in the open interval `(0, 1)`.
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Exponential variate with the given rate.
pub fn sample_exp<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    -open_unit(rng).ln() / rate
}

/// Inverse-CDF draw from a density proportional to `x^-alpha` on `[lo, hi]`.
///
/// Works for any real `alpha`, including `alpha = 1` where the log of the
/// variate is uniform.
pub fn sample_truncated_power_law<R: Rng + ?Sized>(rng: &mut R, alpha: f64, lo: f64, hi: f64) -> f64 {
    let u = open_unit(rng);
    let s = 1.0 - alpha;
    if s.abs() < 1e-12 {
        return lo * (hi / lo).powf(u);
    }
    let a = lo.powf(s);
    let b = hi.powf(s);
    (a + u * (b - a)).powf(1.0 / s)
}

/// Categorical draw from non-negative weights. Returns `None` when all weights are zero.
pub fn sample_categorical<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        last_positive = Some(i);
        acc += w;
        if target < acc {
            return Some(i);
        }
    }
    last_positive
}
