//! Reproducible random streams.
//!
//! Every random quantity is drawn from a ChaCha8 generator keyed by the
//! master seed and a named [`Stream`], with the stream's element index
//! selecting one of ChaCha's 2^64 independent sub-streams:
//!
//! ```text
//! key    = seed_from_u64(splitmix64(master_seed ^ stream_tag))
//! stream = index   (ChaCha8Rng::set_stream)
//! ```
//!
//! Work item `i` of stream `s` therefore sees the same numbers no matter
//! which thread runs it or in which order, so parallel loops reproduce
//! bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named random streams. The discriminant is mixed into the key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    /// Draws from the prior for a probabilistic analysis sample.
    Prior,
    /// Outer-loop parameter draws in nested simulation.
    Outer,
    /// Simulated study data.
    Data,
    /// Posterior (inner-loop) draws.
    Posterior,
    /// Quantile-dataset simulation in moment matching.
    QuantileData,
    /// Nested posterior draws at quantile datasets.
    QuantilePosterior,
    /// Multi-start points and resampling in fitting routines.
    Fit,
    /// Sample-size assignment for the across-sample-size design.
    SampleSize,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Prior => 0x5052_494f_5200_0001,
            Stream::Outer => 0x4f55_5445_5200_0002,
            Stream::Data => 0x4441_5441_0000_0003,
            Stream::Posterior => 0x504f_5354_0000_0004,
            Stream::QuantileData => 0x5144_4154_4100_0005,
            Stream::QuantilePosterior => 0x5150_4f53_5400_0006,
            Stream::Fit => 0x4649_5400_0000_0007,
            Stream::SampleSize => 0x5353_495a_4500_0008,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for element `index` of `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    StreamFamily::new(seed, stream).rng(index)
}

/// A keyed stream whose per-index generators can be produced cheaply.
#[derive(Debug, Clone)]
pub struct StreamFamily {
    base: ChaCha8Rng,
}

impl StreamFamily {
    pub fn new(seed: u64, stream: Stream) -> Self {
        Self { base: ChaCha8Rng::seed_from_u64(splitmix64(seed ^ stream.tag())) }
    }

    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(index);
        rng.set_word_pos(0);
        rng
    }
}

/// Derive a child seed, used when a component takes a plain `u64` seed
/// and spawns its own streams.
pub fn child_seed(seed: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ stream.tag()) ^ index.wrapping_mul(0x2545_f491_4f6c_dd1d))
}
