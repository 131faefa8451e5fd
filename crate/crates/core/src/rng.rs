//! Seeded random streams.
//!
//! Every trajectory owns one stream addressed by `(seed, stream id)`. The
//! stream is a ChaCha8 keystream, i.e. a counter-based generator: the block
//! counter indexes draws within a trajectory and the 64-bit stream word
//! separates trajectories. Ensemble results therefore depend only on the
//! seed and the sample index, never on which worker ran the sample.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Independent stream `id` under `seed`.
pub fn stream(seed: u64, id: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Uniform sample on `(0, 1]`, safe to pass to `ln`.
#[inline]
pub fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.gen::<f64>()
}

/// Unit-mean exponential by inversion, `-ln(u)`.
#[inline]
pub fn unit_exponential<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    -open_uniform(rng).ln()
}

/// Fair coin flips served 64 at a time from one `u64` draw.
#[derive(Debug)]
pub struct CoinFlips {
    bits: u64,
    left: u32,
}

impl CoinFlips {
    pub fn new() -> Self {
        CoinFlips { bits: 0, left: 0 }
    }

    #[inline]
    pub fn flip<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> bool {
        if self.left == 0 {
            self.bits = rng.next_u64();
            self.left = 64;
        }
        let b = self.bits & 1 == 1;
        self.bits >>= 1;
        self.left -= 1;
        b
    }
}

impl Default for CoinFlips {
    fn default() -> Self {
        Self::new()
    }
}
