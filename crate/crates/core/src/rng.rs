//! Seed derivation.
//!
//! Every random quantity in an experiment is drawn from its own ChaCha8
//! stream. The 256-bit key is the master seed (bytes 0..8) followed by a
//! [`Domain`] tag (bytes 8..16), and the 64-bit stream id packs two counters
//! as `(major << 32) | minor`, e.g. `(codebook redraw, user)` or
//! `(codebook redraw, trial)`. A stream depends only on these four numbers, so
//! results do not depend on the order in which work units execute.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a derived stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Domain {
    Channel = 1,
    Codebook = 2,
    Distortion = 3,
    Beams = 4,
    Selection = 5,
    Verify = 6,
}

/// Returns the generator for `(master, domain, major, minor)`.
pub fn stream(master: u64, domain: Domain, major: u32, minor: u32) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master.to_le_bytes());
    key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(((major as u64) << 32) | minor as u64);
    rng
}

/// Generator for a caller-supplied seed with no further structure.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
