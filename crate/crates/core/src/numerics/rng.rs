//! Seeded, counter-based random streams.
//!
//! A stream is a `(master_seed, stream_index)` pair. The master seed keys a
//! ChaCha8 generator and the stream index selects one of its 2⁶⁴ independent
//! streams, so two streams never share state and the draws of replication `r`
//! do not depend on the order in which replications are executed.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Gamma, LogNormal, Normal};

use crate::error::{invalid, Result};
use crate::prelude::*;

/// The generator behind an [`RngStream`].
pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub const fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    /// A generator positioned at the start of this stream.
    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }

    /// Derives a sub-stream by hashing `(stream_index, key)`.
    pub fn child(&self, key: u64) -> Self {
        let mixed =
            splitmix64(self.stream_index ^ splitmix64(key.wrapping_add(0x5851_F42D_4C95_7F2D)));
        Self::new(self.master_seed, mixed)
    }
}

pub fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}

/// `N(mean, sd²)`; `sd = 0` returns `mean`.
pub fn sample_normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> Result<f64> {
    if !(sd >= 0.0) {
        return Err(invalid("normal standard deviation must be non-negative"));
    }
    let dist = Normal::new(mean, sd).map_err(|e| invalid(alloc::format!("normal: {e}")))?;
    Ok(dist.sample(rng))
}

/// `exp(N(mu, sigma²))`, with mean `exp(mu + sigma²/2)`.
pub fn sample_lognormal<R: Rng + ?Sized>(rng: &mut R, mu: f64, sigma: f64) -> Result<f64> {
    if !(sigma >= 0.0) {
        return Err(invalid("lognormal sigma must be non-negative"));
    }
    let dist = LogNormal::new(mu, sigma).map_err(|e| invalid(alloc::format!("lognormal: {e}")))?;
    Ok(dist.sample(rng))
}

pub fn sample_bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> Result<bool> {
    let dist = Bernoulli::new(p).map_err(|e| invalid(alloc::format!("bernoulli: {e}")))?;
    Ok(dist.sample(rng))
}

/// Gamma with the given shape and scale; the mean is `shape · scale`.
pub fn sample_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, scale: f64) -> Result<f64> {
    if !(shape > 0.0) {
        return Err(invalid("gamma shape must be positive"));
    }
    let dist = Gamma::new(shape, scale).map_err(|e| invalid(alloc::format!("gamma: {e}")))?;
    Ok(dist.sample(rng))
}

/// Uniform draw from `[0, 1)`.
pub fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

/// Uniform index in `0..n`.
pub fn sample_index<R: Rng + ?Sized>(rng: &mut R, n: usize) -> usize {
    rng.random_range(0..n)
}

/// `count` distinct indices from `0..n` in increasing order (Floyd's algorithm).
pub fn sample_distinct_sorted<R: Rng + ?Sized>(rng: &mut R, n: usize, count: usize) -> Vec<usize> {
    debug_assert!(count <= n);
    let mut chosen: Vec<usize> = Vec::with_capacity(count);
    for j in (n - count)..n {
        let t = rng.random_range(0..=j);
        match chosen.binary_search(&t) {
            Ok(_) => {
                let pos = chosen.binary_search(&j).unwrap_err();
                chosen.insert(pos, j);
            }
            Err(pos) => chosen.insert(pos, t),
        }
    }
    chosen
}
