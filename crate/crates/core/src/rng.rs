//! Counter-addressable random streams.
//!
//! Every simulated quantity is tied to a `(stream, index)` pair: stream 0
//! carries holding-period uniforms, stream 1 carries the Gaussian shocks.
//! ChaCha8 can seek to any word position, so a worker handling paths
//! `start..end` positions its generators directly and the drawn values do
//! not depend on how paths are split across batches or threads.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use rand_chacha::rand_core::RngCore as UniformSource;

/// Identifies an independent substream under one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Substream {
    Horizon,
    Shock,
}

impl Substream {
    fn id(self) -> u64 {
        match self {
            Substream::Horizon => 0,
            Substream::Shock => 1,
        }
    }
}

/// A `u64` draw occupies two 32-bit ChaCha words.
const WORDS_PER_DRAW: u128 = 2;

/// Generator for `substream` positioned at its `draw_index`-th `u64`.
pub fn stream_at(seed: u64, substream: Substream, draw_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(substream.id());
    rng.set_word_pos(draw_index as u128 * WORDS_PER_DRAW);
    rng
}

/// Maps the top 52 random bits onto the open interval `(0, 1)`.
#[inline]
pub fn open01(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Next uniform in `(0, 1)` from any generator.
#[inline]
pub fn next_open01<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    open01(rng.next_u64())
}
