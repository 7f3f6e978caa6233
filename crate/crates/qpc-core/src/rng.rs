//! Seeded randomness plumbing.
//!
//! Every protocol run owns exactly one generator; nothing in the crate
//! touches global randomness. Monte Carlo batches derive per-trial
//! generators from a master seed by a counter-based stream split, so
//! results are independent of how trials are scheduled across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Generator owned by a single protocol run or Monte Carlo trial.
pub type RunRng = ChaCha12Rng;

/// Generator for trial `index` of a batch keyed by `master_seed`.
pub fn trial_rng(master_seed: u64, index: u64) -> RunRng {
    let mut rng = RunRng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Generator for a standalone run (trial 0 of the seed).
pub fn run_rng(seed: u64) -> RunRng {
    trial_rng(seed, 0)
}
