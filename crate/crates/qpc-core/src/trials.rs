//! Monte Carlo trial runner.
//!
//! Trials are split at the trial boundary; each gets its own generator
//! derived from the master seed by stream index, so a batch produces the
//! same results whether it runs on one thread or many. The `parallel`
//! feature (on by default) backs [`run_trials`] with rayon; without it
//! the sequential path is used.

use crate::rng::{trial_rng, RunRng};

/// Run `trials` independent trials sequentially, in index order.
pub fn run_trials_seq<T>(trials: u64, master_seed: u64, f: impl Fn(u64, &mut RunRng) -> T) -> Vec<T> {
    (0..trials)
        .map(|index| {
            let mut rng = trial_rng(master_seed, index);
            f(index, &mut rng)
        })
        .collect()
}

/// Run `trials` independent trials on the rayon pool. Results come back
/// in trial order regardless of scheduling.
#[cfg(feature = "parallel")]
pub fn run_trials_par<T: Send>(
    trials: u64,
    master_seed: u64,
    f: impl Fn(u64, &mut RunRng) -> T + Sync,
) -> Vec<T> {
    use rayon::prelude::*;
    (0..trials)
        .into_par_iter()
        .map(|index| {
            let mut rng = trial_rng(master_seed, index);
            f(index, &mut rng)
        })
        .collect()
}

/// Run a batch of trials with the default execution backend.
#[cfg(feature = "parallel")]
pub fn run_trials<T: Send>(
    trials: u64,
    master_seed: u64,
    f: impl Fn(u64, &mut RunRng) -> T + Sync,
) -> Vec<T> {
    run_trials_par(trials, master_seed, f)
}

/// Run a batch of trials with the default execution backend.
#[cfg(not(feature = "parallel"))]
pub fn run_trials<T: Send>(
    trials: u64,
    master_seed: u64,
    f: impl Fn(u64, &mut RunRng) -> T + Sync,
) -> Vec<T> {
    run_trials_seq(trials, master_seed, f)
}
