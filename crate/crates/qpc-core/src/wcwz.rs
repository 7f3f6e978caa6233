//! Grouped Bell-pair comparison protocol.
//!
//! Each party hashes its input, splits the hash into ⌈n/m⌉ groups, and
//! per group prepares one Bell pair per bit, sending the travelling
//! halves through decoy-protected transits. Both parties encode their
//! bits as X/I on the travelling half; a joint Bell measurement against
//! the recorded initial state then reveals, position by position,
//! whether the two hash bits agreed — the pair accumulates
//! X^{h_A}·X^{h_B}, which is the identity exactly when the bits match.
//!
//! The original formulation compares only the first group and is
//! demonstrably wrong when later groups differ; `fixed: true` iterates
//! until a difference is found or every group passed.

use rand::RngExt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::AttackStrategy;
use crate::decoy::{self, CheckPolicy, DecoyRecord};
use crate::hashperm::{self, BitString, HashPermError, PermKey};
use crate::outcome::{CheckSite, Leg, Outcome};
use crate::qstate::{self, BellLabel, Ket4};
use crate::rng::RunRng;
use crate::simnet::{
    measure_qubit, Announcement, PairId, PairSlot, PartyId, Qubit, Schedule, SimRun,
};

#[derive(Debug, Error)]
pub enum WcwzError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("strategy not applicable to this protocol: {0}")]
    StrategyNotApplicable(String),
    #[error(transparent)]
    Hash(#[from] HashPermError),
}

/// Run parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WcwzParams {
    /// Hash length in bits.
    pub n: usize,
    /// Group size; the final group may be shorter when m ∤ n.
    pub m: usize,
    /// Decoys per insertion.
    pub k: usize,
    /// Iterate over all groups instead of stopping after the first.
    pub fixed: bool,
    /// Tolerated decoy conflict rate.
    pub threshold: f64,
    /// Shared keyed bijection both parties hash through.
    pub hash_key: PermKey,
}

impl WcwzParams {
    fn validate(&self) -> Result<(), WcwzError> {
        if self.m < 1 || self.m > self.n {
            return Err(WcwzError::InvalidParams(format!(
                "group size must satisfy 1 ≤ m ≤ n, got m={}, n={}",
                self.m, self.n
            )));
        }
        if !(0.0..1.0).contains(&self.threshold) {
            return Err(WcwzError::InvalidParams(format!(
                "threshold must lie in [0, 1), got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// One party's record of a group in flight.
#[derive(Debug)]
pub struct GroupState {
    pub initial_bells: Vec<BellLabel>,
    pub pair_ids: Vec<PairId>,
    pub encodings_applied: Vec<bool>,
}

/// Result of comparing one group, before cross-direction reconciliation.
#[derive(Debug, PartialEq)]
pub enum GroupOutcome {
    /// Per-position "identical" verdicts as seen from each party's own
    /// Bell measurements.
    Verdicts { alice: Vec<bool>, bob: Vec<bool> },
    /// A decoy check failed.
    Detected(CheckSite),
}

/// Split a hash into ⌈n/m⌉ groups of m bits; the last group keeps
/// whatever remains when m does not divide n.
pub fn partition_hash(h: &BitString, m: usize) -> Result<Vec<Vec<bool>>, WcwzError> {
    if m < 1 || m > h.len() {
        return Err(WcwzError::InvalidParams(format!(
            "group size must satisfy 1 ≤ m ≤ n, got m={m}, n={}",
            h.len()
        )));
    }
    Ok(h.bits().chunks(m).map(<[bool]>::to_vec).collect())
}

/// X⊗I at every position whose bit is set; the pure-state view of the
/// encoding step.
pub fn encode_sequence(halves: &[Ket4], bits: &[bool]) -> Result<Vec<Ket4>, WcwzError> {
    if halves.len() != bits.len() {
        return Err(WcwzError::InvalidParams(format!(
            "sequence length {} does not match bit count {}",
            halves.len(),
            bits.len()
        )));
    }
    Ok(halves
        .iter()
        .zip(bits)
        .map(|(half, &bit)| if bit { qstate::apply_x_first(half) } else { *half })
        .collect())
}

/// Per-direction bookkeeping while a group is in flight.
struct DirectionState {
    owner: PartyId,
    group: GroupState,
    forward_decoys: Vec<DecoyRecord>,
    forward_positions: Vec<usize>,
    outbound: Option<Vec<Qubit>>,
    travelling: Vec<Qubit>,
    return_decoys: Vec<DecoyRecord>,
    return_positions: Vec<usize>,
}

fn split_positions(payload: Vec<Qubit>, positions: &[usize]) -> (Vec<Qubit>, Vec<Qubit>) {
    let mut at_positions = Vec::with_capacity(positions.len());
    let mut rest = Vec::with_capacity(payload.len() - positions.len());
    let mut cursor = positions.iter().peekable();
    for (index, qubit) in payload.into_iter().enumerate() {
        if cursor.peek() == Some(&&index) {
            at_positions.push(qubit);
            cursor.next();
        } else {
            rest.push(qubit);
        }
    }
    (at_positions, rest)
}

/// Steps 3–4 for one sequence owner: Bell preparation plus the
/// decoy-protected forward payload.
fn prepare_direction(
    owner: PartyId,
    group_len: usize,
    k: usize,
    run: &mut SimRun,
    rng: &mut RunRng,
) -> DirectionState {
    let initial_bells: Vec<BellLabel> = (0..group_len)
        .map(|_| {
            if rng.random::<bool>() {
                BellLabel::PsiPlus
            } else {
                BellLabel::PhiPlus
            }
        })
        .collect();
    let pair_ids = run.prepare_bell_pairs(owner, &initial_bells);
    let halves: Vec<Qubit> = pair_ids
        .iter()
        .map(|&pair| Qubit::Half {
            pair,
            slot: PairSlot::First,
        })
        .collect();
    let forward_decoys = decoy::generate(k, rng);
    run.note_prepared(owner, k, true);
    let decoy_qubits: Vec<Qubit> = forward_decoys
        .iter()
        .map(|r| Qubit::Pure(qstate::prepare(r.prepared)))
        .collect();
    let (merged, forward_positions) = decoy::insert(halves, decoy_qubits, rng);
    DirectionState {
        owner,
        group: GroupState {
            initial_bells,
            pair_ids,
            encodings_applied: Vec::new(),
        },
        forward_decoys,
        forward_positions,
        outbound: Some(merged),
        travelling: Vec::new(),
        return_decoys: Vec::new(),
        return_positions: Vec::new(),
    }
}

/// Step 5 for one direction: the owner reveals decoy positions, bases
/// and states; the receiver measures and checks.
fn forward_check(
    dir: &mut DirectionState,
    received: Vec<Qubit>,
    threshold: f64,
    run: &mut SimRun,
    rng: &mut RunRng,
) -> Result<(), CheckSite> {
    let owner = dir.owner;
    let receiver = owner.other();
    run.announce(
        owner,
        Announcement::DecoyPositionsAndBases {
            positions: dir.forward_positions.clone(),
            bases: dir.forward_decoys.iter().map(|r| r.prepared.basis()).collect(),
        },
    );
    let (decoy_qubits, travelling) = split_positions(received, &dir.forward_positions);
    let mut measured = Vec::with_capacity(decoy_qubits.len());
    for (mut qubit, record) in decoy_qubits.into_iter().zip(&dir.forward_decoys) {
        let basis = record.prepared.basis();
        let outcome = measure_qubit(&mut qubit, &mut run.registry, basis, rng)
            .expect("forward decoy is live");
        measured.push((basis, outcome));
    }
    run.note_measured(receiver, measured.len());
    run.announce(
        owner,
        Announcement::DecoyStates {
            labels: dir.forward_decoys.iter().map(|r| r.prepared).collect(),
        },
    );
    let records: Vec<DecoyRecord> = dir
        .forward_decoys
        .iter()
        .zip(&dir.forward_positions)
        .zip(&measured)
        .map(|((record, &position), &(basis, outcome))| {
            record.relocated(position).with_measurement(basis, outcome)
        })
        .collect();
    let site = CheckSite {
        leg: Leg::Forward,
        decoys_prepared_by: owner,
    };
    let passed = decoy::verify(&records, &CheckPolicy::batch(threshold))
        .expect("records carry measurements")
        .passed();
    run.note_check_result(receiver, site, passed);
    if !passed {
        return Err(site);
    }
    dir.travelling = travelling;
    Ok(())
}

/// Step 6 for one direction: the receiver encodes its bits on the
/// travelling halves and wraps them in fresh decoys.
fn encode_and_wrap(
    dir: &mut DirectionState,
    bits: &[bool],
    k: usize,
    run: &mut SimRun,
    rng: &mut RunRng,
) {
    let encoder = dir.owner.other();
    for (qubit, &bit) in dir.travelling.iter().zip(bits) {
        if bit {
            if let Qubit::Half { pair, slot } = qubit {
                run.registry.apply_x(*pair, *slot).expect("half is live");
            }
        }
    }
    run.note_encoded(encoder, bits.iter().filter(|&&b| b).count());
    dir.return_decoys = decoy::generate(k, rng);
    run.note_prepared(encoder, k, true);
    let decoy_qubits: Vec<Qubit> = dir
        .return_decoys
        .iter()
        .map(|r| Qubit::Pure(qstate::prepare(r.prepared)))
        .collect();
    let travelling = std::mem::take(&mut dir.travelling);
    let (merged, return_positions) = decoy::insert(travelling, decoy_qubits, rng);
    dir.return_positions = return_positions;
    dir.outbound = Some(merged);
}

/// Step 7 decoy check on a returned sequence; the fresh decoys were
/// prepared by the returning party, so the sequence owner verifies.
fn return_check(
    dir: &mut DirectionState,
    received: Vec<Qubit>,
    threshold: f64,
    run: &mut SimRun,
    rng: &mut RunRng,
) -> Result<(), CheckSite> {
    let owner = dir.owner;
    let returner = owner.other();
    let (decoy_qubits, travelling) = split_positions(received, &dir.return_positions);
    let mut measured = Vec::with_capacity(decoy_qubits.len());
    for (mut qubit, record) in decoy_qubits.into_iter().zip(&dir.return_decoys) {
        let basis = record.prepared.basis();
        let outcome = measure_qubit(&mut qubit, &mut run.registry, basis, rng)
            .expect("return decoy is live");
        measured.push((basis, outcome));
    }
    run.note_measured(owner, measured.len());
    run.announce(
        returner,
        Announcement::DecoyStates {
            labels: dir.return_decoys.iter().map(|r| r.prepared).collect(),
        },
    );
    let records: Vec<DecoyRecord> = dir
        .return_decoys
        .iter()
        .zip(&dir.return_positions)
        .zip(&measured)
        .map(|((record, &position), &(basis, outcome))| {
            record.relocated(position).with_measurement(basis, outcome)
        })
        .collect();
    let site = CheckSite {
        leg: Leg::Return,
        decoys_prepared_by: returner,
    };
    let passed = decoy::verify(&records, &CheckPolicy::batch(threshold))
        .expect("records carry measurements")
        .passed();
    run.note_check_result(owner, site, passed);
    if !passed {
        return Err(site);
    }
    dir.travelling = travelling;
    Ok(())
}

/// Step 8 for one direction: the owner applies its own bits to the
/// returned halves and Bell-measures each pair against the recorded
/// initial state.
fn settle_direction(
    dir: &mut DirectionState,
    own_bits: &[bool],
    run: &mut SimRun,
    rng: &mut RunRng,
) -> Vec<bool> {
    let owner = dir.owner;
    for (qubit, &bit) in dir.travelling.iter().zip(own_bits) {
        if bit {
            if let Qubit::Half { pair, slot } = qubit {
                run.registry.apply_x(*pair, *slot).expect("half is live");
            }
        }
    }
    dir.group.encodings_applied = own_bits.to_vec();
    run.note_encoded(owner, own_bits.iter().filter(|&&b| b).count());
    let mut verdicts = Vec::with_capacity(dir.group.pair_ids.len());
    for (slot, qubit) in dir.travelling.iter().enumerate() {
        let pair = match qubit {
            Qubit::Half { pair, .. } => *pair,
            Qubit::Pure(_) => unreachable!("travelling sequence holds pair halves"),
        };
        debug_assert_eq!(pair, dir.group.pair_ids[slot]);
        let label = run
            .registry
            .bell_measure(pair, rng)
            .expect("pair measured once");
        verdicts.push(label == dir.group.initial_bells[slot]);
    }
    run.note_bell_measured(owner, verdicts.len());
    verdicts
}

/// Execute steps 3–8 for one group in both directions.
pub fn compare_group(
    group_a_bits: &[bool],
    group_b_bits: &[bool],
    params: &WcwzParams,
    adversary: &AttackStrategy,
    run: &mut SimRun,
    rng: &mut RunRng,
) -> Result<GroupOutcome, WcwzError> {
    if group_a_bits.len() != group_b_bits.len() {
        return Err(WcwzError::InvalidParams(
            "group lengths must match".into(),
        ));
    }
    let len = group_a_bits.len();
    let k = params.k;

    // Steps 3–4: both parties prepare pairs and decoy-protected payloads,
    // then the forward transits cross.
    let mut dir_a = prepare_direction(PartyId::Alice, len, k, run, rng);
    let mut dir_b = prepare_direction(PartyId::Bob, len, k, run, rng);
    let fwd_a = run.send_quantum(
        PartyId::Alice,
        PartyId::Bob,
        dir_a.outbound.take().expect("payload staged"),
        adversary,
        Leg::Forward,
        rng,
    );
    let fwd_b = run.send_quantum(
        PartyId::Bob,
        PartyId::Alice,
        dir_b.outbound.take().expect("payload staged"),
        adversary,
        Leg::Forward,
        rng,
    );
    let at_bob = run.receive_quantum(&fwd_a).expect("first delivery");
    let at_alice = run.receive_quantum(&fwd_b).expect("first delivery");

    // Step 5: both forward decoy checks.
    if let Err(site) = forward_check(&mut dir_a, at_bob, params.threshold, run, rng) {
        return Ok(GroupOutcome::Detected(site));
    }
    if let Err(site) = forward_check(&mut dir_b, at_alice, params.threshold, run, rng) {
        return Ok(GroupOutcome::Detected(site));
    }

    // Step 6: cross-encoding plus fresh decoys.
    encode_and_wrap(&mut dir_a, group_b_bits, k, run, rng);
    encode_and_wrap(&mut dir_b, group_a_bits, k, run, rng);

    // Step 7: return transits, then both return decoy infos are
    // published simultaneously.
    let ret_a = run.send_quantum(
        PartyId::Bob,
        PartyId::Alice,
        dir_a.outbound.take().expect("payload staged"),
        adversary,
        Leg::Return,
        rng,
    );
    let ret_b = run.send_quantum(
        PartyId::Alice,
        PartyId::Bob,
        dir_b.outbound.take().expect("payload staged"),
        adversary,
        Leg::Return,
        rng,
    );
    let back_at_alice = run.receive_quantum(&ret_a).expect("first delivery");
    let back_at_bob = run.receive_quantum(&ret_b).expect("first delivery");
    run.exchange_announcements(
        Schedule::Simultaneous,
        |_| Announcement::DecoyPositionsAndBases {
            positions: dir_b.return_positions.clone(),
            bases: dir_b.return_decoys.iter().map(|r| r.prepared.basis()).collect(),
        },
        |_| Announcement::DecoyPositionsAndBases {
            positions: dir_a.return_positions.clone(),
            bases: dir_a.return_decoys.iter().map(|r| r.prepared.basis()).collect(),
        },
    );
    if let Err(site) = return_check(&mut dir_a, back_at_alice, params.threshold, run, rng) {
        return Ok(GroupOutcome::Detected(site));
    }
    if let Err(site) = return_check(&mut dir_b, back_at_bob, params.threshold, run, rng) {
        return Ok(GroupOutcome::Detected(site));
    }

    // Step 8: own-bit encoding plus the joint measurements.
    let alice = settle_direction(&mut dir_a, group_a_bits, run, rng);
    let bob = settle_direction(&mut dir_b, group_b_bits, run, rng);
    run.announce(
        PartyId::Alice,
        Announcement::Verdict {
            equal: alice.iter().all(|&v| v),
        },
    );
    run.announce(
        PartyId::Bob,
        Announcement::Verdict {
            equal: bob.iter().all(|&v| v),
        },
    );
    Ok(GroupOutcome::Verdicts { alice, bob })
}

/// Full protocol run over two private inputs.
pub fn run_wcwz(
    a: &BitString,
    b: &BitString,
    params: &WcwzParams,
    adversary: &AttackStrategy,
    rng: &mut RunRng,
) -> Result<(Outcome, crate::simnet::Transcript), WcwzError> {
    params.validate()?;
    if a.len() != params.n || b.len() != params.n {
        return Err(WcwzError::InvalidParams(format!(
            "inputs must be {} bits, got {} and {}",
            params.n,
            a.len(),
            b.len()
        )));
    }
    adversary
        .validate()
        .map_err(WcwzError::InvalidParams)?;
    if adversary.internal_cheat().is_some()
        || matches!(adversary, AttackStrategy::AdaptiveSecondMover { .. })
    {
        return Err(WcwzError::StrategyNotApplicable(format!("{adversary:?}")));
    }

    let ha = hashperm::hash(a, &params.hash_key)?;
    let hb = hashperm::hash(b, &params.hash_key)?;
    let groups_a = partition_hash(&ha, params.m)?;
    let groups_b = partition_hash(&hb, params.m)?;

    let mut run = SimRun::new();
    let rounds = if params.fixed { groups_a.len() } else { 1 };
    for round in 0..rounds {
        run.note_round_started(round + 1);
        match compare_group(&groups_a[round], &groups_b[round], params, adversary, &mut run, rng)? {
            GroupOutcome::Detected(site) => {
                run.note_abort("decoy check failed");
                return Ok((
                    Outcome::EveDetected {
                        round: round + 1,
                        site,
                    },
                    run.transcript,
                ));
            }
            GroupOutcome::Verdicts { alice, bob } => {
                if alice != bob {
                    run.note_abort("direction verdicts disagree");
                    return Ok((Outcome::Inconsistent, run.transcript));
                }
                let positions: Vec<usize> = alice
                    .iter()
                    .enumerate()
                    .filter(|(_, &identical)| !identical)
                    .map(|(i, _)| round * params.m + i)
                    .collect();
                if !positions.is_empty() {
                    return Ok((
                        Outcome::Differ {
                            round: round + 1,
                            positions,
                        },
                        run.transcript,
                    ));
                }
            }
        }
    }
    Ok((Outcome::Equal, run.transcript))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::run_rng;

    #[test]
    fn partition_shapes() {
        let h = BitString::parse("110100").unwrap();
        let groups = partition_hash(&h, 2).unwrap();
        assert_eq!(groups, vec![vec![true, true], vec![false, true], vec![false, false]]);

        let h5 = BitString::parse("11010").unwrap();
        let groups = partition_hash(&h5, 2).unwrap();
        assert_eq!(groups.len(), 3);
        assert_eq!(groups[2].len(), 1);

        let singles = partition_hash(&h, 1).unwrap();
        assert_eq!(singles.len(), 6);

        assert!(partition_hash(&h, 0).is_err());
        assert!(partition_hash(&h, 7).is_err());
    }

    #[test]
    fn partition_concatenation_reproduces_hash() {
        let mut rng = run_rng(70);
        for _ in 0..200 {
            let n = 1 + rng.random_range(0..24usize);
            let m = 1 + rng.random_range(0..n);
            let h = BitString::random(n, &mut rng);
            let groups = partition_hash(&h, m).unwrap();
            let rebuilt: Vec<bool> = groups.concat();
            assert_eq!(rebuilt, h.bits());
        }
    }

    #[test]
    fn encode_sequence_matches_pair_algebra() {
        let phi = qstate::prepare_bell(BellLabel::PhiPlus);
        let unchanged = encode_sequence(&[phi], &[false]).unwrap();
        assert_eq!(unchanged[0], phi);

        let toggled = encode_sequence(&[phi], &[true]).unwrap();
        assert_eq!(toggled[0], qstate::prepare_bell(BellLabel::PsiPlus));

        let twice = encode_sequence(&toggled, &[true]).unwrap();
        assert_eq!(twice[0], phi);

        assert!(encode_sequence(&[phi], &[true, false]).is_err());
    }

    fn honest_params(n: usize, m: usize, k: usize) -> WcwzParams {
        WcwzParams {
            n,
            m,
            k,
            fixed: true,
            threshold: 0.0,
            hash_key: PermKey::identity(),
        }
    }

    #[test]
    fn group_verdicts_track_bit_agreement() {
        let params = honest_params(2, 2, 3);
        let mut rng = run_rng(71);
        for _ in 0..50 {
            let mut run = SimRun::new();
            let out = compare_group(
                &[true, false],
                &[false, false],
                &params,
                &AttackStrategy::NoAttack,
                &mut run,
                &mut rng,
            )
            .unwrap();
            assert_eq!(
                out,
                GroupOutcome::Verdicts {
                    alice: vec![false, true],
                    bob: vec![false, true],
                }
            );
        }
    }

    #[test]
    fn equal_bits_always_match_everywhere() {
        let params = honest_params(3, 3, 2);
        let mut rng = run_rng(72);
        for bits in [[false, false, false], [true, false, true], [true, true, true]] {
            let mut run = SimRun::new();
            let out = compare_group(
                &bits,
                &bits,
                &params,
                &AttackStrategy::NoAttack,
                &mut run,
                &mut rng,
            )
            .unwrap();
            assert_eq!(
                out,
                GroupOutcome::Verdicts {
                    alice: vec![true; 3],
                    bob: vec![true; 3],
                }
            );
        }
    }

    #[test]
    fn equal_inputs_end_equal() {
        let mut rng = run_rng(73);
        let params = honest_params(6, 2, 4);
        let a = BitString::parse("010110").unwrap();
        let (outcome, transcript) =
            run_wcwz(&a, &a, &params, &AttackStrategy::NoAttack, &mut rng).unwrap();
        assert_eq!(outcome, Outcome::Equal);
        // A full run at (n, m, k) uses 2n Bell pairs and peaks at
        // 2(k + 2m) stored qubits.
        assert_eq!(transcript.counters.bell_pairs_used, 12);
        assert_eq!(transcript.counters.qubits_stored_max, 2 * (4 + 2 * 2) as u64);
    }

    #[test]
    fn original_variant_misses_later_differences() {
        // First-group-only comparison reports Equal although the inputs
        // differ in the third group.
        let mut rng = run_rng(74);
        let mut params = honest_params(6, 2, 4);
        params.fixed = false;
        let a = BitString::parse("000011").unwrap();
        let b = BitString::parse("000010").unwrap();
        let (outcome, _) = run_wcwz(&a, &b, &params, &AttackStrategy::NoAttack, &mut rng).unwrap();
        assert_eq!(outcome, Outcome::Equal);

        // The repaired variant walks the groups and finds it.
        params.fixed = true;
        let (outcome, _) = run_wcwz(&a, &b, &params, &AttackStrategy::NoAttack, &mut rng).unwrap();
        assert_eq!(
            outcome,
            Outcome::Differ {
                round: 3,
                positions: vec![5],
            }
        );
    }

    #[test]
    fn internal_strategies_are_rejected() {
        let mut rng = run_rng(75);
        let params = honest_params(4, 2, 2);
        let a = BitString::parse("0101").unwrap();
        let err = run_wcwz(
            &a,
            &a,
            &params,
            &AttackStrategy::InternalDelayAbort {
                party: PartyId::Alice,
                policy: crate::adversary::InternalPolicy::AlterCodeBit,
            },
            &mut rng,
        );
        assert!(matches!(err, Err(WcwzError::StrategyNotApplicable(_))));
    }

    #[test]
    fn short_final_group_is_compared_as_is() {
        let mut rng = run_rng(76);
        let params = WcwzParams {
            n: 5,
            m: 2,
            k: 3,
            fixed: true,
            threshold: 0.0,
            hash_key: PermKey::identity(),
        };
        let a = BitString::parse("01011").unwrap();
        let b = BitString::parse("01010").unwrap();
        let (outcome, _) = run_wcwz(&a, &b, &params, &AttackStrategy::NoAttack, &mut rng).unwrap();
        assert_eq!(
            outcome,
            Outcome::Differ {
                round: 3,
                positions: vec![4],
            }
        );
    }
}
