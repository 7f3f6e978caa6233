//! Deterministic, seedable simulator and analysis toolkit for two-party
//! quantum private comparison protocols.
//!
//! Two protocol state machines run over a simulated quantum channel with
//! decoy-state protection: a grouped Bell-pair comparison ([`wcwz`]) and
//! a bit-by-bit single-qubit comparison that needs neither entanglement
//! nor quantum memory ([`improved`]). An attack library ([`adversary`])
//! plugs external taps and internal cheats into either, and
//! [`analytics`] evaluates the closed-form leakage and detection rates
//! the Monte Carlo estimates are checked against. Everything is exact
//! complex-amplitude simulation at the two-qubit scale ([`qstate`]) and
//! reproducible from a single seed ([`rng`], [`trials`]).

pub mod adversary;
pub mod analytics;
pub mod coinflip;
pub mod decoy;
pub mod hashperm;
pub mod improved;
pub mod outcome;
pub mod qstate;
pub mod rng;
pub mod simnet;
pub mod trials;
pub mod wcwz;

pub use outcome::{CheckSite, Leg, Outcome};
pub use simnet::{PartyId, Schedule};
