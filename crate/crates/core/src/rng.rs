//! Seed derivation. Every random stream in the crate is a ChaCha20 stream
//! keyed by `(base, replication)` with a separate stream id per purpose, so
//! distinct triples never share a keystream.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type BonusRng = ChaCha20Rng;

/// Stream ids used inside one replication.
pub mod stream {
    pub const SCENARIO: u64 = 1;
    pub const SYNTHETIC: u64 = 2;
    pub const PVALUE_NULLS: u64 = 3;
    pub const SCREENING: u64 = 4;
    /// Procedure-private streams start here; procedure `i` gets `PROCEDURE + i`.
    pub const PROCEDURE: u64 = 1 << 16;
}

pub fn derive_rng(base: u64, replication: u64, stream: u64) -> BonusRng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&base.to_le_bytes());
    seed[8..16].copy_from_slice(&replication.to_le_bytes());
    let mut rng = ChaCha20Rng::from_seed(seed);
    rng.set_stream(stream);
    rng
}

pub fn seeded(seed: u64) -> BonusRng {
    derive_rng(seed, 0, 0)
}

/// Child stream for work forked off an existing generator (e.g. parallel
/// candidate screenings).
pub fn fork<R: rand::Rng + ?Sized>(parent: &mut R, child: u64) -> BonusRng {
    let base: u64 = parent.random();
    derive_rng(base, child, 0)
}
