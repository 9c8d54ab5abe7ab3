//! Seeded random streams.
//!
//! Every consumer of randomness gets its own ChaCha stream derived from a
//! base seed, so changing how many draws one consumer makes never shifts
//! the draws of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Independent purposes that draw random numbers during an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    WeightInit = 1,
    Shuffle = 2,
    NoiseInjection = 3,
    Dropout = 4,
    Validation = 5,
    Evaluation = 6,
    Dataset = 7,
    Generator = 8,
}

/// Deterministic generator for `(seed, stream)`.
pub fn stream(seed: u64, stream: Stream) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Generator for `(seed, stream)` further split by an integer index,
/// e.g. one noise stream per evaluation cell.
pub fn substream(seed: u64, stream: Stream, index: u64) -> Rng {
    let mixed = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17);
    let mut rng = ChaCha8Rng::seed_from_u64(mixed);
    rng.set_stream(stream as u64);
    rng
}
