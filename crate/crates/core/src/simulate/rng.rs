//! Reproducible normal variates.
//!
//! Each chunk of work draws from its own ChaCha stream selected by chunk
//! index, so results do not depend on how chunks are scheduled.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::special_fn::inverse_normal_cdf;

/// Work items per independently seeded stream.
pub const CHUNK: u64 = 1 << 14;

pub struct NormalStream {
    rng: ChaCha8Rng,
}

impl NormalStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        NormalStream { rng }
    }

    /// Stream positioned after `skip` earlier draws.
    pub fn at(seed: u64, stream: u64, skip: u64) -> Self {
        let mut s = Self::new(seed, stream);
        // each draw consumes two 32-bit words
        s.rng.set_word_pos(2 * skip as u128);
        s
    }

    /// Uniform on the open interval (0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        inverse_normal_cdf(self.uniform())
    }
}

/// Splits `0..total` into `(chunk_index, start, len)` triples.
pub fn chunks(total: u64) -> impl Iterator<Item = (u64, u64, u64)> {
    let n = total.div_ceil(CHUNK);
    (0..n).map(move |i| {
        let start = i * CHUNK;
        (i, start, CHUNK.min(total - start))
    })
}
