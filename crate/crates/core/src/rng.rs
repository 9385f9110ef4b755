//! Seeded random streams.
//!
//! A stream is a ChaCha8 generator keyed by a master seed and selected by a
//! stream index, so trial `i` of a run always sees the same numbers no matter
//! which thread plays it.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Role salt keeping the player's randomness apart from the referee's.
const PLAYER_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

/// A random stream that remembers where it came from.
#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
    seed: u64,
    stream: u64,
}

impl RandomStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, seed, stream }
    }

    /// Stream used by the referee and the host for trial `index`.
    pub fn engine(seed: u64, index: u64) -> Self {
        Self::new(seed, index)
    }

    /// Stream used by the player for trial `index`.
    pub fn player(seed: u64, index: u64) -> Self {
        Self::new(seed ^ PLAYER_SALT, index)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }
}

impl RngCore for RandomStream {
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
