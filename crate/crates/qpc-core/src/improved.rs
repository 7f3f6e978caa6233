//! Bit-by-bit comparison protocol with no entanglement and no quantum
//! memory.
//!
//! Per bit and per direction, the sequence sender ships k+1 random BB84
//! qubits. The receiver measures k of them immediately (they become the
//! forward decoys), applies the bit-flip or identity to the one
//! unmeasured code qubit, wraps it in k fresh decoys and returns it
//! without storing anything. The sender measures the whole return in one
//! random bulk basis, checks the forward decoys one by one, and keeps
//! the round only when the code qubit's preparation basis matches the
//! bulk basis — otherwise the round restarts from scratch. After a
//! fraction of the return decoys is verified, both parties disclose
//! their code positions simultaneously, decode, and cross-check
//! verdicts.
//!
//! Encoding uses the basis-covariant flip: the carrier is prepared in
//! either basis, so the flip must invert the bit in both.

use rand::RngExt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{AttackStrategy, InternalPolicy};
use crate::decoy::{self, CheckOutcome, CheckPolicy, DecoyRecord};
use crate::hashperm::{self, BitString, HashPermError, PermKey};
use crate::outcome::{CheckSite, Leg, Outcome};
use crate::qstate::{self, Basis, PrepLabel};
use crate::rng::RunRng;
use crate::simnet::{
    flip_qubit, measure_qubit, Announcement, PartyId, Qubit, Schedule, SimRun, Transcript,
};

/// Attempts per bit round before giving up on a basis match; the miss
/// probability per attempt is 1/2, so exhaustion has probability 2⁻⁶⁴.
pub const MAX_ATTEMPTS: u32 = 64;

#[derive(Debug, Error)]
pub enum ImprovedError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("strategy not applicable to this protocol: {0}")]
    StrategyNotApplicable(String),
    #[error(
        "post-disclosure adaptation is structurally impossible under a simultaneous schedule: \
         the partner has already measured the code qubit in its preparation basis"
    )]
    AdaptationBlocked,
    #[error("basis-match retries exhausted in round {round}")]
    RetriesExhausted { round: usize },
    #[error(transparent)]
    Hash(#[from] HashPermError),
}

/// Run parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImprovedParams {
    /// Hash length in bits.
    pub n: usize,
    /// Decoys per direction per bit; the forward sequence has k+1 qubits.
    pub k: usize,
    /// Portion of return decoys revealed for checking.
    pub check_fraction: f64,
    /// Tolerated decoy conflict rate.
    pub threshold: f64,
    /// How code positions are disclosed. Ordered schedules alternate the
    /// first mover by round parity.
    pub schedule: Schedule,
    /// Shared keyed bijection both parties hash through.
    pub hash_key: PermKey,
}

impl ImprovedParams {
    fn validate(&self) -> Result<(), ImprovedError> {
        if self.n < 1 {
            return Err(ImprovedError::InvalidParams("n must be at least 1".into()));
        }
        if self.k < 1 {
            return Err(ImprovedError::InvalidParams(
                "at least one decoy per direction is required".into(),
            ));
        }
        if !(self.check_fraction > 0.0 && self.check_fraction <= 1.0) {
            return Err(ImprovedError::InvalidParams(format!(
                "check fraction must lie in (0, 1], got {}",
                self.check_fraction
            )));
        }
        if !(0.0..1.0).contains(&self.threshold) {
            return Err(ImprovedError::InvalidParams(format!(
                "threshold must lie in [0, 1), got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// Which way the k+1-qubit sequence travels. The sequence sender is the
/// party who later decodes; the encoder owns the transferred bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    AtoB,
    BtoA,
}

impl Direction {
    pub fn sequence_sender(self) -> PartyId {
        match self {
            Direction::AtoB => PartyId::Alice,
            Direction::BtoA => PartyId::Bob,
        }
    }

    pub fn encoder(self) -> PartyId {
        self.sequence_sender().other()
    }
}

/// Everything one settled bit-transfer leg pins down.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BitRoundState {
    pub direction: Direction,
    pub code_prep: PrepLabel,
    pub code_position_forward: usize,
    pub code_position_return: usize,
    pub bulk_basis: Basis,
    /// Discarded attempts before the basis matched.
    pub retries: u32,
}

/// A leg that passed its forward check and basis match, waiting on the
/// return check and disclosure.
struct PendingLeg {
    state: BitRoundState,
    bulk_outcomes: Vec<bool>,
    return_decoys: Vec<DecoyRecord>,
}

enum LegOutcome {
    Complete(PendingLeg),
    Detected(CheckSite),
}

/// Result of a standalone single-direction transfer.
#[derive(Debug, PartialEq)]
pub enum TransferResult {
    Learned { bit: bool, state: BitRoundState },
    Detected(CheckSite),
}

/// Steps ii-1 through ii-5 for one direction, retrying on basis
/// mismatch with fresh randomness each attempt.
fn run_leg(
    direction: Direction,
    owner_bit: bool,
    round: usize,
    params: &ImprovedParams,
    adversary: &AttackStrategy,
    run: &mut SimRun,
    rng: &mut RunRng,
) -> Result<LegOutcome, ImprovedError> {
    let sender = direction.sequence_sender();
    let owner = direction.encoder();
    let k = params.k;

    for attempt in 1..=MAX_ATTEMPTS {
        // ii-1: k+1 qubits, each prepared in a random BB84 state.
        let labels: Vec<PrepLabel> = (0..=k).map(|_| PrepLabel::random(rng)).collect();
        run.note_prepared(sender, k + 1, false);
        let payload: Vec<Qubit> = labels
            .iter()
            .map(|&label| Qubit::Pure(qstate::prepare(label)))
            .collect();
        let forward = run.send_quantum(sender, owner, payload, adversary, Leg::Forward, rng);
        let mut received = run.receive_quantum(&forward).expect("first delivery");

        // ii-2: the receiver measures k qubits immediately in random
        // bases; the leftover is the code qubit and is flipped per the
        // owner's bit, never stored.
        let code_position_forward = rng.random_range(0..=k);
        let mut owner_measured: Vec<(usize, Basis, bool)> = Vec::with_capacity(k);
        for (position, qubit) in received.iter_mut().enumerate() {
            if position == code_position_forward {
                continue;
            }
            let basis = Basis::random(rng);
            let outcome = measure_qubit(qubit, &mut run.registry, basis, rng)
                .expect("forward qubit is live");
            owner_measured.push((position, basis, outcome));
        }
        run.note_measured(owner, k);
        if owner_bit {
            flip_qubit(&mut received[code_position_forward], &mut run.registry)
                .expect("code qubit is live");
        }
        run.note_encoded(owner, usize::from(owner_bit));
        let code_qubit = received[code_position_forward];

        // Fresh decoys around the code qubit; the return leaves at once.
        let mut return_decoys = decoy::generate(k, rng);
        run.note_prepared(owner, k, true);
        let decoy_qubits: Vec<Qubit> = return_decoys
            .iter()
            .map(|r| Qubit::Pure(qstate::prepare(r.prepared)))
            .collect();
        let (merged, return_positions) = decoy::insert(vec![code_qubit], decoy_qubits, rng);
        for (record, &position) in return_decoys.iter_mut().zip(&return_positions) {
            record.position = position;
        }
        let code_position_return = (0..merged.len())
            .find(|p| !return_positions.contains(p))
            .expect("exactly one code qubit");
        let back = run.send_quantum(owner, sender, merged, adversary, Leg::Return, rng);
        let mut returned = run.receive_quantum(&back).expect("first delivery");

        // ii-3: bulk measurement of the whole return in one basis.
        let bulk_basis = Basis::random(rng);
        let bulk_outcomes: Vec<bool> = returned
            .iter_mut()
            .map(|qubit| {
                measure_qubit(qubit, &mut run.registry, bulk_basis, rng)
                    .expect("returned qubit is live")
            })
            .collect();
        run.note_measured(sender, k + 1);

        // ii-4: forward decoys revealed and checked one by one.
        run.announce(
            owner,
            Announcement::DecoyPositions {
                positions: owner_measured.iter().map(|&(p, _, _)| p).collect(),
            },
        );
        let site = CheckSite {
            leg: Leg::Forward,
            decoys_prepared_by: sender,
        };
        let mut records: Vec<DecoyRecord> = Vec::with_capacity(k);
        let mut failed_at: Option<CheckOutcome> = None;
        for &(position, basis, outcome) in &owner_measured {
            let label = labels[position];
            run.announce(sender, Announcement::DecoyReveal { position, label });
            let record = DecoyRecord::new(position, label).with_measurement(basis, outcome);
            records.push(record);
            if params.threshold == 0.0 {
                let check = decoy::verify(std::slice::from_ref(&record), &CheckPolicy::ideal())
                    .expect("record carries measurement");
                if !check.passed() {
                    failed_at = Some(check);
                    break;
                }
            }
        }
        if failed_at.is_none() && params.threshold > 0.0 {
            let check = decoy::verify(&records, &CheckPolicy::batch(params.threshold))
                .expect("records carry measurements");
            if !check.passed() {
                failed_at = Some(check);
            }
        }
        run.note_check_result(owner, site, failed_at.is_none());
        if failed_at.is_some() {
            return Ok(LegOutcome::Detected(site));
        }

        // ii-5: keep the round only when the code qubit was prepared in
        // the bulk basis; otherwise all data is discarded and the round
        // restarts with fresh randomness.
        let code_prep = labels[code_position_forward];
        if code_prep.basis() != bulk_basis {
            run.announce(sender, Announcement::RetryRound { attempt });
            run.note_round_retried(sender, round, attempt);
            continue;
        }
        run.announce(sender, Announcement::KeepRound);
        return Ok(LegOutcome::Complete(PendingLeg {
            state: BitRoundState {
                direction,
                code_prep,
                code_position_forward,
                code_position_return,
                bulk_basis,
                retries: attempt - 1,
            },
            bulk_outcomes,
            return_decoys,
        }));
    }
    Err(ImprovedError::RetriesExhausted { round })
}

/// Return-leg check: the encoder reveals a sampled portion of its fresh
/// decoys; the sequence sender compares them against the bulk outcomes.
fn check_return(
    leg: &PendingLeg,
    params: &ImprovedParams,
    run: &mut SimRun,
    rng: &mut RunRng,
) -> Result<(), CheckSite> {
    let owner = leg.state.direction.encoder();
    let sender = leg.state.direction.sequence_sender();
    let checked_slots = decoy::choose_checked(leg.return_decoys.len(), params.check_fraction, rng);
    let reveals: Vec<(usize, PrepLabel)> = checked_slots
        .iter()
        .map(|&slot| {
            let record = leg.return_decoys[slot];
            (record.position, record.prepared)
        })
        .collect();
    run.announce(owner, Announcement::ReturnDecoyReveal { reveals: reveals.clone() });
    let records: Vec<DecoyRecord> = reveals
        .iter()
        .map(|&(position, label)| {
            DecoyRecord::new(position, label)
                .with_measurement(leg.state.bulk_basis, leg.bulk_outcomes[position])
        })
        .collect();
    let site = CheckSite {
        leg: Leg::Return,
        decoys_prepared_by: owner,
    };
    let passed = decoy::verify(&records, &CheckPolicy::batch(params.threshold))
        .expect("records carry measurements")
        .passed();
    run.note_check_result(sender, site, passed);
    if passed {
        Ok(())
    } else {
        Err(site)
    }
}

/// Decode a leg once the return code position is disclosed: unchanged
/// state means bit 0, flipped state means bit 1.
fn decode(leg: &PendingLeg, disclosed_position: usize, round: usize, run: &mut SimRun) -> bool {
    let sender = leg.state.direction.sequence_sender();
    let learned = leg.bulk_outcomes[disclosed_position] != leg.state.code_prep.bit();
    run.note_decoded(sender, round, learned);
    learned
}

/// Standalone single-direction transfer of one bit, including the
/// return check, disclosure, and decode.
pub fn transfer_bit(
    owner_bit: bool,
    direction: Direction,
    params: &ImprovedParams,
    adversary: &AttackStrategy,
    run: &mut SimRun,
    rng: &mut RunRng,
) -> Result<TransferResult, ImprovedError> {
    params.validate()?;
    let leg = match run_leg(direction, owner_bit, 1, params, adversary, run, rng)? {
        LegOutcome::Complete(leg) => leg,
        LegOutcome::Detected(site) => return Ok(TransferResult::Detected(site)),
    };
    if let Err(site) = check_return(&leg, params, run, rng) {
        return Ok(TransferResult::Detected(site));
    }
    run.announce(
        leg.state.direction.encoder(),
        Announcement::CodePosition {
            position: leg.state.code_position_return,
        },
    );
    let bit = decode(&leg, leg.state.code_position_return, 1, run);
    Ok(TransferResult::Learned {
        bit,
        state: leg.state,
    })
}

fn round_schedule(base: Schedule, round: usize) -> Schedule {
    match base {
        Schedule::Simultaneous => base,
        // The sequential variant alternates the first mover by round
        // parity.
        Schedule::Ordered { first } => Schedule::Ordered {
            first: if round % 2 == 1 { first } else { first.other() },
        },
    }
}

fn validate_strategy(adversary: &AttackStrategy, schedule: Schedule) -> Result<(), ImprovedError> {
    adversary
        .validate()
        .map_err(ImprovedError::InvalidParams)?;
    match adversary {
        AttackStrategy::AdaptiveSecondMover { .. } => Err(ImprovedError::StrategyNotApplicable(
            "adaptive second mover only applies to coin flipping".into(),
        )),
        AttackStrategy::InternalDelayAbort {
            policy: InternalPolicy::PostDisclosureBitChange,
            ..
        } => match schedule {
            Schedule::Simultaneous => Err(ImprovedError::AdaptationBlocked),
            Schedule::Ordered { .. } => Err(ImprovedError::StrategyNotApplicable(
                "post-disclosure announcement adaptation is not modeled under ordered schedules"
                    .into(),
            )),
        },
        _ => Ok(()),
    }
}

/// Full protocol run over two private inputs.
pub fn run_improved(
    a: &BitString,
    b: &BitString,
    params: &ImprovedParams,
    adversary: &AttackStrategy,
    rng: &mut RunRng,
) -> Result<(Outcome, Transcript), ImprovedError> {
    params.validate()?;
    if a.len() != params.n || b.len() != params.n {
        return Err(ImprovedError::InvalidParams(format!(
            "inputs must be {} bits, got {} and {}",
            params.n,
            a.len(),
            b.len()
        )));
    }
    validate_strategy(adversary, params.schedule)?;
    let cheat = adversary.internal_cheat();

    let ha = hashperm::hash(a, &params.hash_key)?;
    let hb = hashperm::hash(b, &params.hash_key)?;

    let mut run = SimRun::new();
    for round in 1..=params.n {
        run.note_round_started(round);
        let ha_i = ha.bits()[round - 1];
        let hb_i = hb.bits()[round - 1];
        // An internal cheater encodes (and consistently announces) the
        // opposite of its honest hash bit.
        let eff_a = match cheat {
            Some((PartyId::Alice, InternalPolicy::AlterCodeBit)) => !ha_i,
            _ => ha_i,
        };
        let eff_b = match cheat {
            Some((PartyId::Bob, InternalPolicy::AlterCodeBit)) => !hb_i,
            _ => hb_i,
        };

        // Step ii: Bob encodes his bit on Alice's sequence.
        let leg_ab = match run_leg(Direction::AtoB, eff_b, round, params, adversary, &mut run, rng)?
        {
            LegOutcome::Complete(leg) => leg,
            LegOutcome::Detected(site) => {
                run.note_abort("decoy check failed");
                return Ok((Outcome::EveDetected { round, site }, run.transcript));
            }
        };
        // Step iii: Alice encodes her bit on Bob's sequence.
        let leg_ba = match run_leg(Direction::BtoA, eff_a, round, params, adversary, &mut run, rng)?
        {
            LegOutcome::Complete(leg) => leg,
            LegOutcome::Detected(site) => {
                run.note_abort("decoy check failed");
                return Ok((Outcome::EveDetected { round, site }, run.transcript));
            }
        };

        // Return decoy checks for both directions.
        for leg in [&leg_ab, &leg_ba] {
            if let Err(site) = check_return(leg, params, &mut run, rng) {
                run.note_abort("decoy check failed");
                return Ok((Outcome::EveDetected { round, site }, run.transcript));
            }
        }

        // Simultaneous disclosure of the two return code positions.
        let schedule = round_schedule(params.schedule, round);
        let (ann_alice, ann_bob) = run.exchange_announcements(
            schedule,
            |_| Announcement::CodePosition {
                position: leg_ba.state.code_position_return,
            },
            |_| Announcement::CodePosition {
                position: leg_ab.state.code_position_return,
            },
        );
        let pos_ba = match ann_alice {
            Announcement::CodePosition { position } => position,
            _ => unreachable!("disclosure carries a code position"),
        };
        let pos_ab = match ann_bob {
            Announcement::CodePosition { position } => position,
            _ => unreachable!("disclosure carries a code position"),
        };

        // Decode and cross-check.
        let learned_b = decode(&leg_ab, pos_ab, round, &mut run);
        let learned_a = decode(&leg_ba, pos_ba, round, &mut run);
        let alice_verdict = eff_a == learned_b;
        let bob_verdict = eff_b == learned_a;
        run.announce(PartyId::Alice, Announcement::Verdict { equal: alice_verdict });
        run.announce(PartyId::Bob, Announcement::Verdict { equal: bob_verdict });
        match (alice_verdict, bob_verdict) {
            (true, true) => {}
            (false, false) => {
                return Ok((
                    Outcome::Differ {
                        round,
                        positions: vec![round - 1],
                    },
                    run.transcript,
                ));
            }
            _ => {
                run.note_abort("round verdicts disagree");
                return Ok((Outcome::Inconsistent, run.transcript));
            }
        }
    }
    Ok((Outcome::Equal, run.transcript))
}
