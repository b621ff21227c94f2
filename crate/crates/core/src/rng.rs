//! Reproducible random streams.
//!
//! Every trial (or verifier chunk) gets its own generator derived from the
//! pair `(seed, index)`: the ChaCha8 block function keyed by `seed` is run on
//! stream `index` to produce the 256-bit state of a xoshiro256++ generator.
//! The derivation is a pure function of the pair, so results do not depend on
//! the order or the thread in which trials run.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_xoshiro::Xoshiro256PlusPlus;

/// Generator used inside a single trial.
pub type SimRng = Xoshiro256PlusPlus;

/// Independent stream number `index` under master seed `seed`.
pub fn stream(seed: u64, index: u64) -> SimRng {
    let mut key = ChaCha8Rng::seed_from_u64(seed);
    key.set_stream(index);
    let mut state = [0u8; 32];
    key.fill_bytes(&mut state);
    SimRng::from_seed(state)
}
