//! Terminal protocol verdicts and detection sites, shared by both
//! protocol state machines.

use serde::{Deserialize, Serialize};

use crate::simnet::PartyId;

/// Which transit of a comparison round a decoy check guarded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Leg {
    Forward,
    Return,
}

/// Where an eavesdropper was caught: the guarded leg plus the party who
/// prepared the conflicting decoys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckSite {
    pub leg: Leg,
    pub decoys_prepared_by: PartyId,
}

/// Terminal verdict of a protocol run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Outcome {
    /// Every compared position matched.
    Equal,
    /// First round at which a difference surfaced (1-based), with the
    /// 0-based global hash-bit positions that differed.
    Differ { round: usize, positions: Vec<usize> },
    /// A decoy check failed; the run aborted at `site` during `round`.
    EveDetected { round: usize, site: CheckSite },
    /// The two parties' announced verdicts conflicted.
    Inconsistent,
}

impl Outcome {
    pub fn is_eve_detected(&self) -> bool {
        matches!(self, Outcome::EveDetected { .. })
    }

    /// Round index for `Differ` outcomes, if any.
    pub fn differ_round(&self) -> Option<usize> {
        match self {
            Outcome::Differ { round, .. } => Some(*round),
            _ => None,
        }
    }
}
