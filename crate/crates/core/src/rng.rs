//! Named random streams derived from one experiment seed.
//!
//! Each consumer gets its own ChaCha stream id, so adding a consumer never
//! shifts the numbers another one sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream used for parameter initialization.
pub const INIT_STREAM: u64 = 1;
/// Stream used for shuffling training samples.
pub const SHUFFLE_STREAM: u64 = 2;
/// Stream used by synthetic data generators.
pub const DATA_STREAM: u64 = 3;

pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
