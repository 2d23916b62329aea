//! Deterministic random streams.
//!
//! Every stochastic routine draws from a [`RandomSource`] identified by a
//! `(master_seed, stream_id)` pair. The generator state is a pure function of
//! that pair, so a Monte-Carlo realization always sees the same draws no
//! matter which worker thread runs it or in what order.

use rand::{Rng, RngCore, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Result, SimError};

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer. A bijection on `u64`.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash a parent seed and a label into a new 64-bit seed.
pub fn derive_seed(parent: u64, label: u64) -> u64 {
    mix64(mix64(parent ^ 0x6a09_e667_f3bc_c909).wrapping_add(label.wrapping_mul(GOLDEN_GAMMA)))
}

/// A seeded, reproducible random stream.
#[derive(Debug, Clone)]
pub struct RandomSource {
    master_seed: u64,
    stream_id: u64,
    rng: Xoshiro256PlusPlus,
}

impl RandomSource {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        // word 0 is a bijection of the master seed and word 1 a bijection of
        // the stream id, so distinct pairs never share a starting state
        let mut words = [
            mix64(master_seed ^ 0x243f_6a88_85a3_08d3),
            mix64(stream_id ^ 0x1319_8a2e_0370_7344),
            mix64(master_seed.wrapping_add(stream_id.wrapping_mul(GOLDEN_GAMMA))),
            mix64(stream_id.rotate_left(32) ^ master_seed.wrapping_mul(GOLDEN_GAMMA)),
        ];
        if words.iter().all(|&w| w == 0) {
            words[3] = GOLDEN_GAMMA;
        }
        let mut seed = [0u8; 32];
        for (chunk, w) in seed.chunks_exact_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        RandomSource {
            master_seed,
            stream_id,
            rng: Xoshiro256PlusPlus::from_seed(seed),
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Independent sub-stream `index` of this stream.
    ///
    /// Depends only on `(master_seed, stream_id, index)`, never on how many
    /// draws have already been taken from `self`.
    pub fn child(&self, index: u64) -> RandomSource {
        RandomSource::new(derive_seed(self.master_seed, self.stream_id), index)
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform draw in `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform integer in `0..n`.
    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        self.rng.random_range(0..n)
    }

    #[inline]
    pub fn bit(&mut self) -> u8 {
        (self.rng.next_u64() >> 63) as u8
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Stream `index` of the family rooted at `master_seed`.
pub fn derive_stream(master_seed: u64, index: u64) -> RandomSource {
    RandomSource::new(master_seed, index)
}

/// One draw from `N(mean, sigma²)`.
pub fn gaussian(rng: &mut RandomSource, mean: f64, sigma: f64) -> Result<f64> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(SimError::parameter(
            "sigma",
            format!("standard deviation must be finite and >= 0, got {sigma}"),
        ));
    }
    if sigma == 0.0 {
        return Ok(mean);
    }
    Ok(mean + sigma * rng.standard_normal())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn same_stream_same_draws() {
        let mut a = derive_stream(42, 0);
        let mut b = derive_stream(42, 0);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn neighbouring_streams_differ() {
        let mut a = derive_stream(42, 0);
        let mut b = derive_stream(42, 1);
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn hundred_thousand_realization_seeds_are_reproducible_and_distinct() {
        let first: Vec<u64> = (0..100_000u64)
            .map(|k| derive_stream(42, k).next_u64())
            .collect();
        let again: Vec<u64> = (0..100_000u64)
            .map(|k| derive_stream(42, k).next_u64())
            .collect();
        assert_eq!(first, again);
        let mut sorted = first.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), first.len());
    }

    #[test]
    fn child_ignores_parent_consumption() {
        let parent = derive_stream(7, 3);
        let mut used = parent.clone();
        for _ in 0..10 {
            used.next_u64();
        }
        assert_eq!(parent.child(5).next_u64(), used.child(5).next_u64());
        assert_ne!(parent.child(5).next_u64(), parent.child(6).next_u64());
    }

    #[test]
    fn degenerate_gaussian() {
        let mut rng = derive_stream(1, 0);
        assert_eq!(gaussian(&mut rng, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(gaussian(&mut rng, 3.5, 0.0).unwrap(), 3.5);
    }

    #[test]
    fn negative_sigma_rejected() {
        let mut rng = derive_stream(1, 0);
        assert!(matches!(
            gaussian(&mut rng, 0.0, -1.0),
            Err(SimError::Parameter { .. })
        ));
        assert!(gaussian(&mut rng, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn unit_gaussian_variance() {
        let mut rng = derive_stream(2024, 0);
        let xs: Vec<f64> = (0..1_000_000)
            .map(|_| gaussian(&mut rng, 0.0, 1.0).unwrap())
            .collect();
        let (mean, var) = moments(&xs);
        assert!(mean.abs() < 5.0 / 1000.0, "mean {mean}");
        assert!((0.99..=1.01).contains(&var), "var {var}");
    }

    #[test]
    fn shifted_gaussian_mean() {
        let mut rng = derive_stream(2024, 1);
        let xs: Vec<f64> = (0..1_000_000)
            .map(|_| gaussian(&mut rng, 5.0, 2.0).unwrap())
            .collect();
        let (mean, var) = moments(&xs);
        assert!((4.99..=5.01).contains(&mean), "mean {mean}");
        assert!((var - 4.0).abs() < 0.04, "var {var}");
    }

    #[test]
    fn streams_are_uncorrelated() {
        let mut a = derive_stream(42, 0);
        let mut b = derive_stream(42, 1);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| a.standard_normal()).collect();
        let ys: Vec<f64> = (0..n).map(|_| b.standard_normal()).collect();
        let (mx, vx) = moments(&xs);
        let (my, vy) = moments(&ys);
        let cov = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / (n as f64 - 1.0);
        let rho = cov / (vx * vy).sqrt();
        assert!(rho.abs() < 0.01, "rho {rho}");
    }
}
