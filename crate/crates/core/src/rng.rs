//! Seeded, portable random streams.
//!
//! Every random decision in the crate is drawn from a [`Stream`], which is
//! ChaCha8 keyed from a 64-bit seed. The exact construction is part of the
//! output contract, so subsets are reproducible by any implementation that
//! follows it:
//!
//! 1. The 32-byte ChaCha key is derived from the 64-bit `seed` with the PCG32
//!    expansion used by `rand_core::SeedableRng::seed_from_u64`.
//! 2. `substream(seed, index)` selects ChaCha stream number `index` under that
//!    key. `Stream::new(seed)` is `substream(seed, 0)`.
//! 3. Words are consumed as little-endian `u64` via `next_u64`.
//! 4. Bounded integers in `[0, n)` use Lemire's multiply-shift method with
//!    rejection (no modulo bias).
//! 5. Unit reals in `[0, 1)` are `(next_u64 >> 11) * 2^-53`.
//! 6. Uniform k-subsets of `0..n` run a partial Fisher-Yates shuffle over the
//!    identity array `[0, 1, .., n-1]`: for `i` in `0..k` swap position `i` with
//!    `i + below(n - i)`. The first `k` entries, sorted ascending, are the subset.
//! 7. Reservoir samples use Algorithm R: item `i >= k` replaces slot
//!    `below(i + 1)` when that value is `< k`.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct Stream {
    inner: ChaCha8Rng,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self::substream(seed, 0)
    }

    pub fn substream(seed: u64, index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(index);
        Stream { inner }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `[0, n)`. `n` must be non-zero.
    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0) is empty");
        let mut m = u128::from(self.next_u64()) * u128::from(n);
        let mut low = m as u64;
        if low < n {
            let threshold = n.wrapping_neg() % n;
            while low < threshold {
                m = u128::from(self.next_u64()) * u128::from(n);
                low = m as u64;
            }
        }
        (m >> 64) as u64
    }

    #[inline]
    pub fn below_usize(&mut self, n: usize) -> usize {
        self.below(n as u64) as usize
    }

    #[inline]
    pub fn unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Reusable buffer for repeated uniform subset draws over `0..n`.
///
/// The buffer is reset to the identity before each draw so a draw depends only
/// on the stream passed in, never on earlier draws.
#[derive(Clone, Debug)]
pub struct SubsetSampler {
    scratch: Vec<usize>,
}

impl SubsetSampler {
    pub fn new(population: usize) -> Self {
        SubsetSampler {
            scratch: (0..population).collect(),
        }
    }

    pub fn population(&self) -> usize {
        self.scratch.len()
    }

    /// Draws `k` distinct indices. The returned slice is in draw order.
    pub fn draw(&mut self, k: usize, stream: &mut Stream) -> &[usize] {
        let n = self.scratch.len();
        assert!(k <= n, "subset larger than population");
        for (i, slot) in self.scratch.iter_mut().enumerate() {
            *slot = i;
        }
        for i in 0..k {
            let j = i + stream.below_usize(n - i);
            self.scratch.swap(i, j);
        }
        &self.scratch[..k]
    }
}

/// Uniform `k`-subset of `0..n`, sorted ascending.
pub fn sample_indices(n: usize, k: usize, stream: &mut Stream) -> Vec<usize> {
    let mut sampler = SubsetSampler::new(n);
    let mut picked = sampler.draw(k, stream).to_vec();
    picked.sort_unstable();
    picked
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substreams_differ_and_repeat() {
        let a: Vec<u64> = {
            let mut s = Stream::substream(7, 1);
            (0..4).map(|_| s.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut s = Stream::substream(7, 2);
            (0..4).map(|_| s.next_u64()).collect()
        };
        let again: Vec<u64> = {
            let mut s = Stream::substream(7, 1);
            (0..4).map(|_| s.next_u64()).collect()
        };
        assert_ne!(a, b);
        assert_eq!(a, again);
    }

    #[test]
    fn below_stays_in_range() {
        let mut s = Stream::new(3);
        for n in [1u64, 2, 3, 7, 1000, u64::MAX] {
            for _ in 0..200 {
                assert!(s.below(n) < n);
            }
        }
    }

    #[test]
    fn unit_in_half_open_interval() {
        let mut s = Stream::new(11);
        for _ in 0..10_000 {
            let u = s.unit_f64();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn sample_indices_edges() {
        let mut s = Stream::new(1);
        assert!(sample_indices(10, 0, &mut s).is_empty());
        assert_eq!(sample_indices(10, 10, &mut s), (0..10).collect::<Vec<_>>());
        let picked = sample_indices(100, 30, &mut s);
        assert_eq!(picked.len(), 30);
        assert!(picked.windows(2).all(|w| w[0] < w[1]));
    }
}
