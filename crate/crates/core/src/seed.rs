//! Deterministic random streams derived from one 64-bit seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream identifiers; each subsystem draws from its own stream
/// so adding draws in one never shifts another.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    HallNoise = 1,
    SpectrumNoise = 2,
    SplittingNoise = 3,
    Sampling = 4,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
