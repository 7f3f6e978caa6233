//! Attack strategy library: external channel taps and internal cheater
//! behaviors, plus the Monte Carlo estimators used to compare them with
//! the closed-form detection and spoiling rates.
//!
//! Every adversary decision is a function of the strategy parameters,
//! the run's generator, and [`EveView`] — the observations her taps
//! legitimately produced plus what she overhears on the classical
//! channel. Party-private state is not reachable from a tap:
//!
//! ```compile_fail
//! fn evil(view: &qpc_core::adversary::EveView) -> Vec<bool> {
//!     view.party_secret_bits.clone()
//! }
//! ```

use rand::RngExt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decoy::{self, CheckPolicy};
use crate::outcome::Leg;
use crate::qstate::{self, Basis, Ket, PrepLabel};
use crate::rng::RunRng;
use crate::simnet::{flip_qubit, measure_qubit, EntanglementRegistry, PartyId, Qubit};
use crate::trials::run_trials;

#[derive(Debug, Error)]
pub enum AdversaryError {
    #[error("expected an internal cheater strategy or no attack, got {0}")]
    NotInternal(String),
    #[error(transparent)]
    Improved(#[from] crate::improved::ImprovedError),
}

/// Internal cheats a legitimate party may attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InternalPolicy {
    /// Encode the opposite of the honest hash bit on the partner's code
    /// qubit before positions are disclosed.
    AlterCodeBit,
    /// Try to change the announced bit after disclosure. Structurally
    /// impossible under a simultaneous schedule: by the time the cheater
    /// learns anything, the partner has already measured.
    PostDisclosureBitChange,
}

/// Adversary behavior injected into the channel or a party.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "attack", rename_all = "snake_case")]
pub enum AttackStrategy {
    NoAttack,
    /// Measure each in-flight qubit independently with probability
    /// `alpha` in a uniformly random basis and forward the collapsed
    /// state.
    InterceptResend { alpha: f64 },
    /// Measure every qubit of a returned sequence in one guessed basis
    /// (uniform when `guess` is `None`) and resend.
    GuessBasisReturn { guess: Option<Basis> },
    /// Bit-flip `count` uniformly chosen qubits of a returned sequence
    /// without measuring.
    XFlip { count: usize },
    /// A legitimate party deviates from the protocol.
    InternalDelayAbort {
        party: PartyId,
        policy: InternalPolicy,
    },
    /// Coin flipping only: the second mover announces target ⊕ opponent.
    AdaptiveSecondMover { target: bool },
}

impl AttackStrategy {
    pub fn validate(&self) -> Result<(), String> {
        match self {
            AttackStrategy::InterceptResend { alpha } if !(0.0..=1.0).contains(alpha) => {
                Err(format!("interception probability must lie in [0, 1], got {alpha}"))
            }
            AttackStrategy::XFlip { count } if *count == 0 => {
                Err("flip count must be at least 1".into())
            }
            _ => Ok(()),
        }
    }

    /// The internal cheat this strategy asks a party to run, if any.
    pub fn internal_cheat(&self) -> Option<(PartyId, InternalPolicy)> {
        match self {
            AttackStrategy::InternalDelayAbort { party, policy } => Some((*party, *policy)),
            _ => None,
        }
    }

    fn describe(&self) -> String {
        format!("{self:?}")
    }
}

/// One observation from a channel tap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EveObservation {
    pub leg: Leg,
    pub position: usize,
    pub basis: Basis,
    pub outcome: bool,
}

/// Everything Eve knows: tap observations, her basis guesses, decoded-bit
/// hypotheses, and code positions she heard announced in the clear.
#[derive(Debug, Clone, Default, Serialize)]
pub struct EveView {
    pub observed: Vec<EveObservation>,
    pub basis_guesses: Vec<(Leg, Basis)>,
    pub guesses: Vec<bool>,
    pub heard_code_positions: Vec<(PartyId, usize)>,
}

impl EveView {
    /// Eve's maximum-likelihood guess of the bit encoded on a returned
    /// sequence: her measured outcome at the announced code position.
    /// Without the preparation state this is as good as a coin toss.
    pub fn guess_encoded_bit(&self, announced_by: PartyId) -> Option<bool> {
        let (_, position) = self
            .heard_code_positions
            .iter()
            .rev()
            .find(|(party, _)| *party == announced_by)?;
        self.observed
            .iter()
            .rev()
            .find(|obs| obs.leg == Leg::Return && obs.position == *position)
            .map(|obs| obs.outcome)
    }
}

/// Apply a strategy to an in-flight payload. Returns how many qubits the
/// tap touched; observations accumulate in `view`.
pub(crate) fn tap_payload(
    qubits: &mut [Qubit],
    registry: &mut EntanglementRegistry,
    strategy: &AttackStrategy,
    leg: Leg,
    view: &mut EveView,
    rng: &mut RunRng,
) -> usize {
    match strategy {
        AttackStrategy::InterceptResend { alpha } => {
            let mut touched = 0;
            for (position, qubit) in qubits.iter_mut().enumerate() {
                if rng.random::<f64>() < *alpha {
                    let basis = Basis::random(rng);
                    let outcome = measure_qubit(qubit, registry, basis, rng)
                        .expect("in-flight qubit is live");
                    view.observed.push(EveObservation {
                        leg,
                        position,
                        basis,
                        outcome,
                    });
                    touched += 1;
                }
            }
            touched
        }
        AttackStrategy::GuessBasisReturn { guess } => {
            if leg != Leg::Return {
                return 0;
            }
            let basis = guess.unwrap_or_else(|| Basis::random(rng));
            view.basis_guesses.push((leg, basis));
            for (position, qubit) in qubits.iter_mut().enumerate() {
                let outcome =
                    measure_qubit(qubit, registry, basis, rng).expect("in-flight qubit is live");
                view.observed.push(EveObservation {
                    leg,
                    position,
                    basis,
                    outcome,
                });
            }
            qubits.len()
        }
        AttackStrategy::XFlip { count } => {
            if leg != Leg::Return {
                return 0;
            }
            flip_targets(qubits, registry, *count, rng)
        }
        AttackStrategy::NoAttack
        | AttackStrategy::InternalDelayAbort { .. }
        | AttackStrategy::AdaptiveSecondMover { .. } => 0,
    }
}

fn flip_targets(
    qubits: &mut [Qubit],
    registry: &mut EntanglementRegistry,
    count: usize,
    rng: &mut RunRng,
) -> usize {
    let total = qubits.len();
    let count = count.min(total);
    let mut indices: Vec<usize> = (0..total).collect();
    for i in 0..count {
        let j = i + rng.random_range(0..(total - i));
        indices.swap(i, j);
    }
    for &target in &indices[..count] {
        flip_qubit(&mut qubits[target], registry).expect("in-flight qubit is live");
    }
    count
}

/// Pure-payload tap surface: transform a sequence of standalone qubits
/// and report what Eve learned.
pub fn tap_quantum(
    kets: Vec<Ket>,
    strategy: &AttackStrategy,
    leg: Leg,
    rng: &mut RunRng,
) -> (Vec<Ket>, EveView) {
    let mut registry = EntanglementRegistry::new();
    let mut qubits: Vec<Qubit> = kets.into_iter().map(Qubit::Pure).collect();
    let mut view = EveView::default();
    tap_payload(&mut qubits, &mut registry, strategy, leg, &mut view, rng);
    let kets = qubits
        .into_iter()
        .map(|q| match q {
            Qubit::Pure(k) => k,
            Qubit::Half { .. } => unreachable!("pure payload stays pure"),
        })
        .collect();
    (kets, view)
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_err: f64,
    pub trials: u64,
}

impl McEstimate {
    pub fn from_bernoulli(successes: u64, trials: u64) -> Self {
        let p = successes as f64 / trials as f64;
        McEstimate {
            estimate: p,
            std_err: (p * (1.0 - p) / trials as f64).sqrt(),
            trials,
        }
    }

    /// |estimate − reference| measured in standard errors (∞ if the
    /// estimator collapsed to zero variance and missed).
    pub fn sigmas_from(&self, reference: f64) -> f64 {
        let gap = (self.estimate - reference).abs();
        if self.std_err == 0.0 {
            if gap == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            gap / self.std_err
        }
    }
}

/// Which forward transit the escape experiment models: the Bell-pair
/// protocol reveals decoy bases before measurement (receiver always
/// measures in the right basis), the single-qubit protocol has the
/// receiver measure immediately in random bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForwardRoute {
    Wcwz,
    Improved,
}

/// Estimate the probability that intercept-resend on round(α·k) of k
/// decoys passes the decoy check. The per-decoy escape factor is 7/8
/// when the receiver measured in a random basis and 3/4 when the basis
/// was announced before measurement.
pub fn escape_probability_mc(
    route: ForwardRoute,
    alpha: f64,
    k: usize,
    trials: u64,
    seed: u64,
) -> McEstimate {
    assert!(trials >= 1_000, "estimates need at least 10^3 trials");
    assert!((0.0..=1.0).contains(&alpha));
    let escapes = run_trials(trials, seed, |_, rng| {
        let records = decoy::generate(k, rng);
        let mut kets: Vec<Ket> = records.iter().map(|r| qstate::prepare(r.prepared)).collect();
        for &target in &decoy::choose_checked(k, alpha, rng) {
            let basis = Basis::random(rng);
            let (_, collapsed) = qstate::measure(&kets[target], basis, rng);
            kets[target] = collapsed;
        }
        let checked: Vec<decoy::DecoyRecord> = records
            .iter()
            .zip(&kets)
            .map(|(record, ket)| {
                let basis = match route {
                    ForwardRoute::Improved => Basis::random(rng),
                    ForwardRoute::Wcwz => record.prepared.basis(),
                };
                let (outcome, _) = qstate::measure(ket, basis, rng);
                record.with_measurement(basis, outcome)
            })
            .collect();
        decoy::verify(&checked, &CheckPolicy::batch(0.0))
            .expect("records carry measurements")
            .passed()
    })
    .into_iter()
    .filter(|&escaped| escaped)
    .count() as u64;
    McEstimate::from_bernoulli(escapes, trials)
}

/// Detailed spoiling experiment on a returned sequence under a correct
/// bulk-basis guess.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpoilingReport {
    /// Decoded bit flipped and every checked decoy agreed.
    pub undetected_flip: McEstimate,
    /// Fraction of trials the decoy check failed.
    pub detected: f64,
    /// Trials where a flipped, checked, basis-matched decoy failed to
    /// trip the check (expected to be impossible).
    pub implication_violations: u64,
}

/// Spoiling attempt: Eve measures the whole returned sequence in the
/// (correctly guessed) bulk basis, then flips `flip_count` qubits. She
/// wins a trial if the decoded bit flipped and no checked decoy
/// conflicted.
pub fn spoiling_mc(
    k: usize,
    flip_count: usize,
    check_fraction: f64,
    trials: u64,
    seed: u64,
) -> SpoilingReport {
    assert!(trials >= 1_000, "estimates need at least 10^3 trials");
    let results = run_trials(trials, seed, |_, rng| {
        let owner_bit = rng.random::<bool>();
        let code_label = PrepLabel::random(rng);
        let bulk = code_label.basis();
        let code = if owner_bit {
            qstate::apply_flip(&qstate::prepare(code_label))
        } else {
            qstate::prepare(code_label)
        };
        let fresh = decoy::generate(k, rng);
        let decoy_kets: Vec<Ket> = fresh.iter().map(|r| qstate::prepare(r.prepared)).collect();
        let (mut merged, decoy_positions) = decoy::insert(vec![code], decoy_kets, rng);
        let code_position = (0..merged.len())
            .find(|p| !decoy_positions.contains(p))
            .expect("exactly one code qubit");

        // Correct-guess measurement leaves same-basis states untouched
        // and collapses the rest into the bulk basis.
        for ket in merged.iter_mut() {
            let (_, collapsed) = qstate::measure(ket, bulk, rng);
            *ket = collapsed;
        }
        let mut flip_targets: Vec<usize> = (0..merged.len()).collect();
        let count = flip_count.min(merged.len());
        for i in 0..count {
            let j = i + rng.random_range(0..(merged.len() - i));
            flip_targets.swap(i, j);
        }
        let flipped = &flip_targets[..count];
        for &t in flipped {
            merged[t] = qstate::apply_flip(&merged[t]);
        }

        let outcomes: Vec<bool> = merged
            .iter()
            .map(|ket| qstate::measure(ket, bulk, rng).0)
            .collect();
        let learned = outcomes[code_position] != code_label.bit();

        let checked_slots = decoy::choose_checked(k, check_fraction, rng);
        let checked: Vec<decoy::DecoyRecord> = checked_slots
            .iter()
            .map(|&slot| {
                let position = decoy_positions[slot];
                fresh[slot]
                    .with_measurement(bulk, outcomes[position])
                    .relocated(position)
            })
            .collect();
        let passed = decoy::verify(&checked, &CheckPolicy::batch(0.0))
            .expect("records carry measurements")
            .passed();

        let must_detect = checked_slots.iter().any(|&slot| {
            flipped.contains(&decoy_positions[slot]) && fresh[slot].prepared.basis() == bulk
        });
        let violation = must_detect && passed;
        (learned != owner_bit && passed, !passed, violation)
    });
    let trials_n = results.len() as u64;
    let wins = results.iter().filter(|r| r.0).count() as u64;
    let detected = results.iter().filter(|r| r.1).count() as f64 / trials_n as f64;
    let violations = results.iter().filter(|r| r.2).count() as u64;
    SpoilingReport {
        undetected_flip: McEstimate::from_bernoulli(wins, trials_n),
        detected,
        implication_violations: violations,
    }
}

/// Single-flip spoiling success rate; expected ≈ 1/(k+1).
pub fn spoiling_success_mc(k: usize, trials: u64, seed: u64) -> McEstimate {
    spoiling_mc(k, 1, 0.5, trials, seed).undetected_flip
}

/// Frequency with which one round of the bit-by-bit protocol concludes
/// "equal" over uniformly random opposing bits, honest or with an
/// internal cheater. Invariantly 1/2 under a simultaneous schedule.
pub fn internal_cheat_effect_mc(
    strategy: &AttackStrategy,
    trials: u64,
    seed: u64,
) -> Result<McEstimate, AdversaryError> {
    use crate::hashperm::{BitString, PermKey};
    use crate::improved::{run_improved, ImprovedParams};
    use crate::outcome::Outcome;
    use crate::simnet::Schedule;

    assert!(trials >= 1_000, "estimates need at least 10^3 trials");
    match strategy {
        AttackStrategy::NoAttack | AttackStrategy::InternalDelayAbort { .. } => {}
        other => return Err(AdversaryError::NotInternal(other.describe())),
    }
    let params = ImprovedParams {
        n: 1,
        k: 4,
        check_fraction: 0.5,
        threshold: 0.0,
        schedule: Schedule::Simultaneous,
        hash_key: PermKey::identity(),
    };
    // Surface schedule/strategy rejections before burning trials.
    {
        let mut rng = crate::rng::trial_rng(seed, 0);
        let a = BitString::random(1, &mut rng);
        let b = BitString::random(1, &mut rng);
        run_improved(&a, &b, &params, strategy, &mut rng)?;
    }
    let agreements = run_trials(trials, seed, |_, rng| {
        let a = BitString::random(1, rng);
        let b = BitString::random(1, rng);
        let (outcome, _) =
            run_improved(&a, &b, &params, strategy, rng).expect("validated configuration");
        outcome == Outcome::Equal
    })
    .into_iter()
    .filter(|&agreed| agreed)
    .count() as u64;
    Ok(McEstimate::from_bernoulli(agreements, trials))
}
