//! Simulated two-party message-passing harness.
//!
//! A [`SimRun`] owns everything one protocol execution touches: the
//! entanglement registry (joint states of Bell pairs whose halves are in
//! flight or in hand), the append-only [`Transcript`], and the channel's
//! pending deliveries. Quantum payloads are consumed exactly once; a
//! second delivery attempt is a no-cloning violation and errors.
//!
//! Time is logical: a tick is one message-wait boundary. Quantum storage
//! is sampled at each boundary, so qubits prepared and sent (or received
//! and measured) within a single step never count as stored — only state
//! held while waiting on the other party does. That matches the resource
//! accounting the protocols are compared by.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{tap_payload, AttackStrategy, EveView};
use crate::outcome::{CheckSite, Leg};
use crate::qstate::{self, Basis, BellLabel, Ket, Ket4, PrepLabel};
use crate::rng::RunRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartyId {
    Alice,
    Bob,
}

impl PartyId {
    pub fn other(self) -> PartyId {
        match self {
            PartyId::Alice => PartyId::Bob,
            PartyId::Bob => PartyId::Alice,
        }
    }

    fn index(self) -> usize {
        match self {
            PartyId::Alice => 0,
            PartyId::Bob => 1,
        }
    }
}

impl std::fmt::Display for PartyId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PartyId::Alice => write!(f, "alice"),
            PartyId::Bob => write!(f, "bob"),
        }
    }
}

/// Who an event is attributed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Actor {
    Alice,
    Bob,
    Eve,
    Channel,
}

impl From<PartyId> for Actor {
    fn from(p: PartyId) -> Actor {
        match p {
            PartyId::Alice => Actor::Alice,
            PartyId::Bob => Actor::Bob,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("quantum payload was already delivered; qubits cannot be cloned")]
    PayloadAlreadyDelivered,
    #[error("Bell pair {0} was already consumed by a joint measurement")]
    PairConsumed(usize),
    #[error("invalid timing scene: {0}")]
    InvalidTimingScene(String),
}

/// Handle to a Bell pair tracked by the registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairId(usize);

/// Which half of a pair a travelling qubit is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSlot {
    First,
    Second,
}

/// One qubit in a channel payload: either a standalone state or one half
/// of a registered Bell pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Qubit {
    Pure(Ket),
    Half { pair: PairId, slot: PairSlot },
}

impl Qubit {
    pub fn is_entangled_half(&self) -> bool {
        matches!(self, Qubit::Half { .. })
    }
}

/// Joint states of all Bell pairs created during a run. Operations on a
/// travelling half act on the recorded two-qubit state, so disturbances
/// propagate to the retained half exactly as physics dictates.
#[derive(Debug, Default)]
pub struct EntanglementRegistry {
    pairs: Vec<Option<Ket4>>,
}

impl EntanglementRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn new_pair(&mut self, label: BellLabel) -> PairId {
        self.pairs.push(Some(qstate::prepare_bell(label)));
        PairId(self.pairs.len() - 1)
    }

    pub fn pairs_created(&self) -> usize {
        self.pairs.len()
    }

    /// Joint state of a live pair; `None` once consumed.
    pub fn state(&self, id: PairId) -> Option<&Ket4> {
        self.pairs[id.0].as_ref()
    }

    pub fn apply_x(&mut self, id: PairId, slot: PairSlot) -> Result<(), SimError> {
        let state = self.pairs[id.0].as_mut().ok_or(SimError::PairConsumed(id.0))?;
        *state = match slot {
            PairSlot::First => qstate::apply_x_first(state),
            PairSlot::Second => qstate::apply_x_second(state),
        };
        Ok(())
    }

    /// Measure one half of a pair; the joint state collapses in place.
    pub fn measure_half(
        &mut self,
        id: PairId,
        slot: PairSlot,
        basis: Basis,
        rng: &mut RunRng,
    ) -> Result<bool, SimError> {
        let state = self.pairs[id.0].as_mut().ok_or(SimError::PairConsumed(id.0))?;
        let (bit, collapsed) = match slot {
            PairSlot::First => qstate::measure_first(state, basis, rng),
            PairSlot::Second => qstate::measure_second(state, basis, rng),
        };
        *state = collapsed;
        Ok(bit)
    }

    /// Joint Bell measurement; consumes the pair.
    pub fn bell_measure(&mut self, id: PairId, rng: &mut RunRng) -> Result<BellLabel, SimError> {
        let state = self.pairs[id.0].take().ok_or(SimError::PairConsumed(id.0))?;
        Ok(qstate::bell_measure(&state, rng))
    }
}

/// Measure any payload qubit, entangled or not.
pub fn measure_qubit(
    qubit: &mut Qubit,
    registry: &mut EntanglementRegistry,
    basis: Basis,
    rng: &mut RunRng,
) -> Result<bool, SimError> {
    match qubit {
        Qubit::Pure(ket) => {
            let (bit, collapsed) = qstate::measure(ket, basis, rng);
            *ket = collapsed;
            Ok(bit)
        }
        Qubit::Half { pair, slot } => registry.measure_half(*pair, *slot, basis, rng),
    }
}

/// Bit-flip any payload qubit: basis-covariant flip on a standalone
/// qubit, X on the touched half of a pair.
pub fn flip_qubit(qubit: &mut Qubit, registry: &mut EntanglementRegistry) -> Result<(), SimError> {
    match qubit {
        Qubit::Pure(ket) => {
            *ket = qstate::apply_flip(ket);
            Ok(())
        }
        Qubit::Half { pair, slot } => registry.apply_x(*pair, *slot),
    }
}

/// Structured classical announcement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Announcement {
    /// Positions of decoys inside a merged sequence.
    DecoyPositions { positions: Vec<usize> },
    /// Positions plus the bases the decoys should be measured in.
    DecoyPositionsAndBases {
        positions: Vec<usize>,
        bases: Vec<Basis>,
    },
    /// Batch reveal of decoy preparations, aligned with an earlier
    /// position announcement.
    DecoyStates { labels: Vec<PrepLabel> },
    /// One-by-one reveal of a single decoy's preparation.
    DecoyReveal { position: usize, label: PrepLabel },
    /// Reveal of a sampled portion of return decoys.
    ReturnDecoyReveal { reveals: Vec<(usize, PrepLabel)> },
    /// Which qubit of a returned sequence is the code qubit.
    CodePosition { position: usize },
    /// Basis mismatch: discard the round's data and start over.
    RetryRound { attempt: u32 },
    /// Basis matched: keep the round's data.
    KeepRound,
    /// Aggregate comparison verdict for the current round or group.
    Verdict { equal: bool },
    /// Coin-flipping bit.
    CoinBit { bit: bool },
}

/// Announcement scheduling contract. Under `Simultaneous` each party's
/// announcement is computed before either sees the other's; under
/// `Ordered` the second mover receives the first announcement as input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    Simultaneous,
    Ordered { first: PartyId },
}

/// Evaluate two announcement builders under a schedule. Builders receive
/// `None` when the contract denies them the opponent's message, so an
/// adaptive strategy is impossible to even express under `Simultaneous`.
pub fn exchange<A, B>(
    schedule: Schedule,
    build_alice: impl FnOnce(Option<&B>) -> A,
    build_bob: impl FnOnce(Option<&A>) -> B,
) -> (A, B) {
    match schedule {
        Schedule::Simultaneous => (build_alice(None), build_bob(None)),
        Schedule::Ordered { first: PartyId::Alice } => {
            let a = build_alice(None);
            let b = build_bob(Some(&a));
            (a, b)
        }
        Schedule::Ordered { first: PartyId::Bob } => {
            let b = build_bob(None);
            let a = build_alice(Some(&b));
            (a, b)
        }
    }
}

/// Geometry of the agent-site timing cheat: sites separated by
/// `distance`, messages travelling at `signal_speed`, and a covert relay
/// `agent_distance` away from the honest sender.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingScene {
    pub distance: f64,
    pub signal_speed: f64,
    pub agent_distance: f64,
}

impl TimingScene {
    pub fn new(distance: f64, signal_speed: f64, agent_distance: f64) -> Result<Self, SimError> {
        if !(distance.is_finite() && signal_speed.is_finite() && agent_distance.is_finite()) {
            return Err(SimError::InvalidTimingScene("non-finite parameter".into()));
        }
        if distance < 0.0 || signal_speed <= 0.0 {
            return Err(SimError::InvalidTimingScene(
                "distance must be ≥ 0 and signal speed > 0".into(),
            ));
        }
        if !(0.0..=distance).contains(&agent_distance) {
            return Err(SimError::InvalidTimingScene(
                "agent must sit between the two sites".into(),
            ));
        }
        Ok(TimingScene {
            distance,
            signal_speed,
            agent_distance,
        })
    }
}

/// Length of the interval during which a cheater with a relay at
/// `agent_distance` can read the honest message and still reply on time:
/// (L − 2d)/c, clamped below at zero.
pub fn adaptation_window(scene: &TimingScene) -> f64 {
    ((scene.distance - 2.0 * scene.agent_distance) / scene.signal_speed).max(0.0)
}

/// Resource counters accumulated by a transcript.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    /// Qubits pushed through the quantum channel, decoys included.
    pub qubits_sent: u64,
    /// Peak number of qubits held across a wait boundary, both parties
    /// combined. In-flight qubits belong to the channel, not a party.
    pub qubits_stored_max: u64,
    /// Bell pairs created over the whole run.
    pub bell_pairs_used: u64,
    /// Decoy qubits generated over the whole run.
    pub decoys_used: u64,
    /// Entangled halves that crossed the channel.
    pub entangled_halves_sent: u64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EventKind {
    BellPairsPrepared { party: PartyId, count: usize },
    QubitsPrepared { party: PartyId, count: usize },
    DecoysPrepared { party: PartyId, count: usize },
    QuantumSent {
        from: PartyId,
        to: PartyId,
        qubits: usize,
        entangled_halves: usize,
    },
    EveTouched { leg: Leg, qubits: usize },
    QuantumDelivered { to: PartyId, qubits: usize },
    QubitsMeasured { party: PartyId, count: usize },
    Encoded { party: PartyId, qubits: usize },
    BellMeasured { party: PartyId, pairs: usize },
    Announced { from: PartyId, payload: Announcement },
    DecoyCheckPassed { checked_by: PartyId, site: CheckSite },
    DecoyCheckFailed { checked_by: PartyId, site: CheckSite },
    RoundStarted { round: usize },
    RoundRetried { round: usize, attempt: u32 },
    Decoded { party: PartyId, round: usize, bit: bool },
    Aborted { reason: String },
}

/// One transcript entry: logical time, attributed actor, what happened.
#[derive(Debug, Clone, Serialize)]
pub struct Event {
    pub tick: u64,
    pub actor: Actor,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// Append-only event log plus resource accounting for one run.
#[derive(Debug, Default)]
pub struct Transcript {
    pub events: Vec<Event>,
    pub counters: Counters,
    pub eve_view: EveView,
    tick: u64,
    holding: [i64; 2],
}

impl Transcript {
    pub fn tick(&self) -> u64 {
        self.tick
    }

    fn push(&mut self, actor: Actor, kind: EventKind) {
        self.events.push(Event {
            tick: self.tick,
            actor,
            kind,
        });
    }

    /// Advance logical time and sample how much quantum state the two
    /// parties are sitting on while they wait.
    fn wait_boundary(&mut self) {
        let held = (self.holding[0] + self.holding[1]).max(0) as u64;
        self.counters.qubits_stored_max = self.counters.qubits_stored_max.max(held);
        self.tick += 1;
    }

    fn hold(&mut self, party: PartyId, delta: i64) {
        self.holding[party.index()] += delta;
        debug_assert!(
            self.holding[party.index()] >= 0,
            "party released more qubits than it held"
        );
    }

    /// Serialize the event log as JSON lines, one event per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for event in &self.events {
            out.push_str(&serde_json::to_string(event).expect("events serialize"));
            out.push('\n');
        }
        out
    }
}

struct PendingDelivery {
    to: PartyId,
    qubits: Vec<Qubit>,
}

/// Handle to an in-flight quantum payload.
#[derive(Debug)]
#[must_use = "a sent payload must be explicitly received"]
pub struct Delivery(usize);

/// Everything a single protocol run owns.
#[derive(Default)]
pub struct SimRun {
    pub registry: EntanglementRegistry,
    pub transcript: Transcript,
    pending: Vec<Option<PendingDelivery>>,
}

impl SimRun {
    pub fn new() -> Self {
        Self::default()
    }

    /// Create and record Bell pairs for `party`; both halves start in
    /// the party's hands.
    pub fn prepare_bell_pairs(&mut self, party: PartyId, labels: &[BellLabel]) -> Vec<PairId> {
        let ids: Vec<PairId> = labels.iter().map(|&l| self.registry.new_pair(l)).collect();
        self.transcript.counters.bell_pairs_used += labels.len() as u64;
        self.transcript.hold(party, 2 * labels.len() as i64);
        self.transcript.push(
            party.into(),
            EventKind::BellPairsPrepared {
                party,
                count: labels.len(),
            },
        );
        ids
    }

    /// Record fresh single-qubit preparations.
    pub fn note_prepared(&mut self, party: PartyId, count: usize, as_decoys: bool) {
        self.transcript.hold(party, count as i64);
        if as_decoys {
            self.transcript.counters.decoys_used += count as u64;
            self.transcript
                .push(party.into(), EventKind::DecoysPrepared { party, count });
        } else {
            self.transcript
                .push(party.into(), EventKind::QubitsPrepared { party, count });
        }
    }

    /// Record that `party` measured (and thereby released) `count` qubits.
    pub fn note_measured(&mut self, party: PartyId, count: usize) {
        self.transcript.hold(party, -(count as i64));
        self.transcript
            .push(party.into(), EventKind::QubitsMeasured { party, count });
    }

    /// Record a joint measurement consuming whole pairs.
    pub fn note_bell_measured(&mut self, party: PartyId, pairs: usize) {
        self.transcript.hold(party, -(2 * pairs as i64));
        self.transcript
            .push(party.into(), EventKind::BellMeasured { party, pairs });
    }

    pub fn note_encoded(&mut self, party: PartyId, qubits: usize) {
        self.transcript
            .push(party.into(), EventKind::Encoded { party, qubits });
    }

    pub fn note_round_started(&mut self, round: usize) {
        self.transcript
            .push(Actor::Channel, EventKind::RoundStarted { round });
    }

    pub fn note_round_retried(&mut self, party: PartyId, round: usize, attempt: u32) {
        self.transcript
            .push(party.into(), EventKind::RoundRetried { round, attempt });
    }

    pub fn note_decoded(&mut self, party: PartyId, round: usize, bit: bool) {
        self.transcript
            .push(party.into(), EventKind::Decoded { party, round, bit });
    }

    pub fn note_check_result(&mut self, checked_by: PartyId, site: CheckSite, passed: bool) {
        let kind = if passed {
            EventKind::DecoyCheckPassed { checked_by, site }
        } else {
            EventKind::DecoyCheckFailed { checked_by, site }
        };
        self.transcript.push(checked_by.into(), kind);
    }

    pub fn note_abort(&mut self, reason: impl Into<String>) {
        self.transcript.push(
            Actor::Channel,
            EventKind::Aborted {
                reason: reason.into(),
            },
        );
    }

    /// Put a quantum payload on the wire. The eavesdropping strategy gets
    /// its chance here; whatever it does is logged against Eve.
    pub fn send_quantum(
        &mut self,
        from: PartyId,
        to: PartyId,
        mut qubits: Vec<Qubit>,
        strategy: &AttackStrategy,
        leg: Leg,
        rng: &mut RunRng,
    ) -> Delivery {
        let halves = qubits.iter().filter(|q| q.is_entangled_half()).count();
        self.transcript.hold(from, -(qubits.len() as i64));
        self.transcript.counters.qubits_sent += qubits.len() as u64;
        self.transcript.counters.entangled_halves_sent += halves as u64;
        self.transcript.push(
            from.into(),
            EventKind::QuantumSent {
                from,
                to,
                qubits: qubits.len(),
                entangled_halves: halves,
            },
        );
        let touched = tap_payload(
            &mut qubits,
            &mut self.registry,
            strategy,
            leg,
            &mut self.transcript.eve_view,
            rng,
        );
        if touched > 0 {
            self.transcript.push(
                Actor::Eve,
                EventKind::EveTouched {
                    leg,
                    qubits: touched,
                },
            );
        }
        self.pending.push(Some(PendingDelivery { to, qubits }));
        Delivery(self.pending.len() - 1)
    }

    /// Take a payload off the wire. Each payload can be taken exactly
    /// once; a replay is a no-cloning violation.
    pub fn receive_quantum(&mut self, delivery: &Delivery) -> Result<Vec<Qubit>, SimError> {
        self.transcript.wait_boundary();
        let pending = self.pending[delivery.0]
            .take()
            .ok_or(SimError::PayloadAlreadyDelivered)?;
        self.transcript.hold(pending.to, pending.qubits.len() as i64);
        self.transcript.push(
            Actor::Channel,
            EventKind::QuantumDelivered {
                to: pending.to,
                qubits: pending.qubits.len(),
            },
        );
        Ok(pending.qubits)
    }

    /// Log a classical announcement. Eve hears the classical channel;
    /// announcements she can use are mirrored into her view.
    pub fn announce(&mut self, from: PartyId, payload: Announcement) {
        self.transcript.wait_boundary();
        if let Announcement::CodePosition { position } = payload {
            let view = &mut self.transcript.eve_view;
            view.heard_code_positions.push((from, position));
            // A disclosed code position turns any return-leg observation
            // at that position into a decoded-bit hypothesis.
            if let Some(hypothesis) = view
                .observed
                .iter()
                .rev()
                .find(|obs| obs.leg == Leg::Return && obs.position == position)
                .map(|obs| obs.outcome)
            {
                view.guesses.push(hypothesis);
            }
        }
        self.transcript
            .push(from.into(), EventKind::Announced { from, payload });
    }

    /// Exchange one announcement per party under the schedule contract
    /// and log both.
    pub fn exchange_announcements(
        &mut self,
        schedule: Schedule,
        build_alice: impl FnOnce(Option<&Announcement>) -> Announcement,
        build_bob: impl FnOnce(Option<&Announcement>) -> Announcement,
    ) -> (Announcement, Announcement) {
        let (a, b) = exchange(schedule, build_alice, build_bob);
        self.announce(PartyId::Alice, a.clone());
        self.announce(PartyId::Bob, b.clone());
        (a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::prepare;
    use crate::rng::run_rng;
    use rand::RngExt;

    #[test]
    fn no_attack_delivers_payload_unchanged() {
        let mut run = SimRun::new();
        let mut rng = run_rng(20);
        let payload = vec![
            Qubit::Pure(prepare(PrepLabel::Zero)),
            Qubit::Pure(prepare(PrepLabel::Minus)),
        ];
        run.note_prepared(PartyId::Alice, 2, false);
        let d = run.send_quantum(
            PartyId::Alice,
            PartyId::Bob,
            payload.clone(),
            &AttackStrategy::NoAttack,
            Leg::Forward,
            &mut rng,
        );
        let delivered = run.receive_quantum(&d).unwrap();
        assert_eq!(delivered, payload);
    }

    #[test]
    fn double_delivery_is_a_no_cloning_violation() {
        let mut run = SimRun::new();
        let mut rng = run_rng(21);
        run.note_prepared(PartyId::Alice, 1, false);
        let d = run.send_quantum(
            PartyId::Alice,
            PartyId::Bob,
            vec![Qubit::Pure(prepare(PrepLabel::Plus))],
            &AttackStrategy::NoAttack,
            Leg::Forward,
            &mut rng,
        );
        run.receive_quantum(&d).unwrap();
        run.transcript.hold(PartyId::Bob, -1); // test bookkeeping only
        assert_eq!(
            run.receive_quantum(&d),
            Err(SimError::PayloadAlreadyDelivered)
        );
    }

    #[test]
    fn replayed_receives_always_error() {
        let mut run = SimRun::new();
        let mut rng = run_rng(22);
        for i in 0..32 {
            run.note_prepared(PartyId::Alice, 1, false);
            let d = run.send_quantum(
                PartyId::Alice,
                PartyId::Bob,
                vec![Qubit::Pure(prepare(PrepLabel::Zero))],
                &AttackStrategy::NoAttack,
                Leg::Forward,
                &mut rng,
            );
            let first = run.receive_quantum(&d);
            assert!(first.is_ok(), "delivery {i} should succeed once");
            run.transcript.hold(PartyId::Bob, -1);
            for _ in 0..3 {
                assert_eq!(
                    run.receive_quantum(&d),
                    Err(SimError::PayloadAlreadyDelivered)
                );
            }
        }
    }

    #[test]
    fn pair_consumed_twice_errors() {
        let mut run = SimRun::new();
        let mut rng = run_rng(23);
        let ids = run.prepare_bell_pairs(PartyId::Alice, &[BellLabel::PhiPlus]);
        run.registry.bell_measure(ids[0], &mut rng).unwrap();
        assert!(matches!(
            run.registry.bell_measure(ids[0], &mut rng),
            Err(SimError::PairConsumed(_))
        ));
    }

    #[test]
    fn adaptation_window_values() {
        let w = |d: f64| {
            adaptation_window(&TimingScene::new(3.0, 1.0, d).unwrap())
        };
        assert!((w(1.0) - 1.0).abs() <= 1e-12); // d = L/3 → (1/3)L/c
        assert!((w(1.5) - 0.0).abs() <= 1e-12); // midpoint: no slack
        assert!((w(0.0) - 3.0).abs() <= 1e-12); // co-located agent: full L/c
        assert!(w(2.9) >= 0.0); // past midpoint clamps at zero
        assert!(TimingScene::new(3.0, 1.0, 4.0).is_err());
        assert!(TimingScene::new(3.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn simultaneous_exchange_is_order_independent() {
        // Each builder owns its own generator, so evaluation order can
        // be swapped without changing either output.
        let forward = {
            let mut ra = run_rng(31);
            let mut rb = run_rng(32);
            exchange(
                Schedule::Simultaneous,
                |_: Option<&u64>| ra.random::<u64>(),
                |_: Option<&u64>| rb.random::<u64>(),
            )
        };
        let swapped = {
            let mut ra = run_rng(31);
            let mut rb = run_rng(32);
            let (b, a) = exchange(
                Schedule::Simultaneous,
                |_: Option<&u64>| rb.random::<u64>(),
                |_: Option<&u64>| ra.random::<u64>(),
            );
            (a, b)
        };
        assert_eq!(forward, swapped);
    }

    #[test]
    fn ordered_exchange_feeds_second_mover() {
        let (a, b) = exchange(
            Schedule::Ordered { first: PartyId::Alice },
            |_| 7u32,
            |seen: Option<&u32>| *seen.unwrap() + 1,
        );
        assert_eq!((a, b), (7, 8));

        let (a, b) = exchange(
            Schedule::Ordered { first: PartyId::Bob },
            |seen: Option<&u32>| *seen.unwrap() * 2,
            |_| 5u32,
        );
        assert_eq!((a, b), (10, 5));
    }

    #[test]
    fn honest_ordered_matches_simultaneous_exactly() {
        // Honest builders ignore the opponent input, so for the same
        // seeds the two schedules produce identical outputs.
        for seed in 0..10_000u64 {
            let run_under = |schedule: Schedule| {
                let mut ra = run_rng(seed);
                let mut rb = run_rng(seed.wrapping_add(1 << 32));
                exchange(
                    schedule,
                    |_: Option<&bool>| ra.random::<bool>(),
                    |_: Option<&bool>| rb.random::<bool>(),
                )
            };
            assert_eq!(
                run_under(Schedule::Simultaneous),
                run_under(Schedule::Ordered { first: PartyId::Bob })
            );
        }
    }

    #[test]
    fn transcript_jsonl_one_line_per_event() {
        let mut run = SimRun::new();
        run.note_round_started(1);
        run.announce(
            PartyId::Alice,
            Announcement::Verdict { equal: true },
        );
        let jsonl = run.transcript.to_jsonl();
        assert_eq!(jsonl.lines().count(), run.transcript.events.len());
        for line in jsonl.lines() {
            let parsed: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(parsed.get("tick").is_some());
            assert!(parsed.get("event").is_some());
        }
    }
}
