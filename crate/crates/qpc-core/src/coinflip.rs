//! XOR coin flipping under the schedule contract.
//!
//! Each party picks a random bit; both are published under the schedule
//! and the coin is their XOR. Under a simultaneous schedule the builder
//! closures cannot read the opponent's bit, so adaptation is impossible
//! by construction and the bias is exactly zero whenever at least one
//! party draws uniformly. Under an ordered schedule the second mover
//! forces any target with certainty.

use rand::RngExt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::McEstimate;
use crate::rng::RunRng;
use crate::simnet::{exchange, PartyId, Schedule};
use crate::trials::run_trials;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CoinflipError {
    #[error("an adaptive strategy requires an ordered schedule with that party moving second")]
    AdaptiveNeedsSecondMove,
}

/// Per-party behavior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum CfStrategy {
    Honest,
    /// Publish target ⊕ opponent-bit; only expressible as the second
    /// mover of an ordered schedule.
    AdaptiveSecondMover { target: bool },
}

fn validate(schedule: Schedule, alice: CfStrategy, bob: CfStrategy) -> Result<(), CoinflipError> {
    let adaptive_ok = |party: PartyId| match schedule {
        Schedule::Simultaneous => false,
        Schedule::Ordered { first } => first != party,
    };
    if matches!(alice, CfStrategy::AdaptiveSecondMover { .. }) && !adaptive_ok(PartyId::Alice) {
        return Err(CoinflipError::AdaptiveNeedsSecondMove);
    }
    if matches!(bob, CfStrategy::AdaptiveSecondMover { .. }) && !adaptive_ok(PartyId::Bob) {
        return Err(CoinflipError::AdaptiveNeedsSecondMove);
    }
    Ok(())
}

/// One coin flip: returns c = a ⊕ b.
pub fn run_cf(
    schedule: Schedule,
    alice: CfStrategy,
    bob: CfStrategy,
    rng: &mut RunRng,
) -> Result<bool, CoinflipError> {
    validate(schedule, alice, bob)?;
    let alice_draw = rng.random::<bool>();
    let bob_draw = rng.random::<bool>();
    let (a, b) = exchange(
        schedule,
        |seen: Option<&bool>| match alice {
            CfStrategy::Honest => alice_draw,
            CfStrategy::AdaptiveSecondMover { target } => {
                target ^ seen.expect("validated as second mover")
            }
        },
        |seen: Option<&bool>| match bob {
            CfStrategy::Honest => bob_draw,
            CfStrategy::AdaptiveSecondMover { target } => {
                target ^ seen.expect("validated as second mover")
            }
        },
    );
    Ok(a ^ b)
}

/// Empirical coin distribution over a trial batch.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BiasEstimate {
    /// |P(c = 0) − 1/2|.
    pub bias: f64,
    pub p_zero: f64,
    pub std_err: f64,
    pub trials: u64,
}

/// Estimate the bias of the protocol under the given strategies.
pub fn bias_estimate(
    schedule: Schedule,
    alice: CfStrategy,
    bob: CfStrategy,
    trials: u64,
    seed: u64,
) -> Result<BiasEstimate, CoinflipError> {
    assert!(trials >= 1_000, "estimates need at least 10^3 trials");
    validate(schedule, alice, bob)?;
    let zeroes = run_trials(trials, seed, |_, rng| {
        !run_cf(schedule, alice, bob, rng).expect("validated configuration")
    })
    .into_iter()
    .filter(|&zero| zero)
    .count() as u64;
    let est = McEstimate::from_bernoulli(zeroes, trials);
    Ok(BiasEstimate {
        bias: (est.estimate - 0.5).abs(),
        p_zero: est.estimate,
        std_err: est.std_err,
        trials,
    })
}

/// Exact bias of the simultaneous honest protocol, by enumeration of the
/// four equally likely draw pairs: XOR with an independent uniform bit
/// is uniform, so this is identically zero.
pub fn analytic_simultaneous_bias() -> f64 {
    let mut p_zero: f64 = 0.0;
    for a in [false, true] {
        for b in [false, true] {
            if !(a ^ b) {
                p_zero += 0.25;
            }
        }
    }
    (p_zero - 0.5).abs()
}
