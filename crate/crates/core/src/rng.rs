//! Reproducible random streams.
//!
//! Every Monte Carlo trajectory draws from its own ChaCha8 stream. The key is expanded from
//! the 64-bit master seed with `SeedableRng::seed_from_u64` (PCG32 expansion, fixed by
//! `rand_core`), and the trajectory index selects the ChaCha stream id. Output therefore
//! depends only on `(master_seed, index)`, never on thread count or scheduling.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type PathRng = ChaCha8Rng;

/// Independent stream number `index` under `master_seed`.
pub fn child_rng(master_seed: u64, index: u64) -> PathRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Derives a new master seed, e.g. one per backtest day or per training batch.
pub fn derive_seed(master_seed: u64, tag: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed ^ tag.rotate_left(17));
    rng.set_stream(index);
    rng.set_word_pos(1 << 20);
    rng.next_u64()
}
