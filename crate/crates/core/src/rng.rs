//! Seeded random streams.
//!
//! Every randomized routine takes a `&mut LabRng`. Independent Monte Carlo trials
//! draw from [`substream`], so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type LabRng = ChaCha20Rng;

pub fn seeded(seed: u64) -> LabRng {
    LabRng::seed_from_u64(seed)
}

/// Stream `index` derived from `seed`; distinct indices give independent streams.
pub fn substream(seed: u64, index: u64) -> LabRng {
    let mut rng = LabRng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}
