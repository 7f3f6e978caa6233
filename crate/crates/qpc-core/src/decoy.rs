//! Decoy-state machinery shared by both protocols: generation, uniform
//! random insertion among code qubits, and conflict checking against a
//! reveal policy.
//!
//! A revealed decoy conflicts only when it was measured in its own
//! preparation basis and the outcome disagrees with the prepared bit;
//! cross-basis outcomes are uniformly random and carry no information,
//! so they are dropped from the error-rate denominator.

use rand::RngExt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qstate::{Basis, PrepLabel};
use crate::rng::RunRng;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecoyError {
    #[error("decoy at position {0} is missing measurement data")]
    MissingMeasurement(usize),
}

/// One decoy qubit's lifecycle: where it sits in the merged sequence,
/// what was prepared, and (once measured) in which basis with what
/// outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoyRecord {
    pub position: usize,
    pub prepared: PrepLabel,
    pub measured_basis: Option<Basis>,
    pub outcome: Option<bool>,
}

impl DecoyRecord {
    pub fn new(position: usize, prepared: PrepLabel) -> Self {
        DecoyRecord {
            position,
            prepared,
            measured_basis: None,
            outcome: None,
        }
    }

    pub fn with_measurement(mut self, basis: Basis, outcome: bool) -> Self {
        self.measured_basis = Some(basis);
        self.outcome = Some(outcome);
        self
    }

    /// Same record repositioned inside a merged sequence.
    pub fn relocated(mut self, position: usize) -> Self {
        self.position = position;
        self
    }
}

/// How revealed decoys are checked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RevealMode {
    /// Sequential reveal; with a zero threshold the check fails at the
    /// first conflict.
    OneByOne,
    /// Reveal everything, then compare the conflict rate to the
    /// threshold.
    Batch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckPolicy {
    pub reveal_mode: RevealMode,
    /// Tolerated conflict rate among same-basis records; zero is the
    /// ideal scenario.
    pub threshold: f64,
    /// Portion of decoys the owner reveals for return-leg checks.
    pub fraction: f64,
}

impl CheckPolicy {
    /// Ideal scenario: one-by-one reveal, abort on the first conflict.
    pub fn ideal() -> Self {
        CheckPolicy {
            reveal_mode: RevealMode::OneByOne,
            threshold: 0.0,
            fraction: 1.0,
        }
    }

    pub fn batch(threshold: f64) -> Self {
        CheckPolicy {
            reveal_mode: RevealMode::Batch,
            threshold,
            fraction: 1.0,
        }
    }
}

/// Result of verifying a revealed decoy set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum CheckOutcome {
    Pass,
    /// First conflicting position under one-by-one reveal.
    FailAt { position: usize },
    /// Same-basis conflict rate exceeded the threshold.
    FailRate { rate: f64, threshold: f64 },
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, CheckOutcome::Pass)
    }
}

/// Draw `k` decoys, each prepared uniformly over the four BB84 states.
pub fn generate(k: usize, rng: &mut RunRng) -> Vec<DecoyRecord> {
    (0..k)
        .map(|i| DecoyRecord::new(i, PrepLabel::random(rng)))
        .collect()
}

/// Merge decoys into a code sequence, preserving the relative order of
/// both and choosing the interleaving uniformly at random. Returns the
/// merged sequence and the (sorted) positions the decoys landed on.
pub fn insert<T>(code: Vec<T>, decoys: Vec<T>, rng: &mut RunRng) -> (Vec<T>, Vec<usize>) {
    let total = code.len() + decoys.len();
    let mut merged = Vec::with_capacity(total);
    let mut positions = Vec::with_capacity(decoys.len());
    let mut code_iter = code.into_iter();
    let mut decoy_iter = decoys.into_iter();
    let mut code_left = code_iter.len();
    let mut decoys_left = decoy_iter.len();
    for slot in 0..total {
        // Sequential sampling: taking a decoy with probability
        // d/(c+d) at every slot makes all C(c+d, d) interleavings
        // equally likely.
        let draw: f64 = rng.random();
        let remaining = (code_left + decoys_left) as f64;
        let take_decoy =
            decoys_left > 0 && (code_left == 0 || draw * remaining < decoys_left as f64);
        if take_decoy {
            merged.push(decoy_iter.next().expect("decoy available"));
            positions.push(slot);
            decoys_left -= 1;
        } else {
            merged.push(code_iter.next().expect("code qubit available"));
            code_left -= 1;
        }
    }
    (merged, positions)
}

/// Check announced decoys against their measurements.
pub fn verify(announced: &[DecoyRecord], policy: &CheckPolicy) -> Result<CheckOutcome, DecoyError> {
    let mut same_basis = 0u64;
    let mut conflicts = 0u64;
    for record in announced {
        let basis = record
            .measured_basis
            .ok_or(DecoyError::MissingMeasurement(record.position))?;
        let outcome = record
            .outcome
            .ok_or(DecoyError::MissingMeasurement(record.position))?;
        if basis != record.prepared.basis() {
            continue;
        }
        same_basis += 1;
        if outcome != record.prepared.bit() {
            conflicts += 1;
            if matches!(policy.reveal_mode, RevealMode::OneByOne) && policy.threshold == 0.0 {
                return Ok(CheckOutcome::FailAt {
                    position: record.position,
                });
            }
        }
    }
    let rate = if same_basis == 0 {
        0.0
    } else {
        conflicts as f64 / same_basis as f64
    };
    if rate > policy.threshold {
        Ok(CheckOutcome::FailRate {
            rate,
            threshold: policy.threshold,
        })
    } else {
        Ok(CheckOutcome::Pass)
    }
}

/// Choose which decoys the owner reveals for a fraction-limited check:
/// round(fraction·total) indices drawn uniformly without replacement.
pub fn choose_checked(total: usize, fraction: f64, rng: &mut RunRng) -> Vec<usize> {
    let count = ((fraction * total as f64).round() as usize).min(total);
    let mut indices: Vec<usize> = (0..total).collect();
    for i in 0..count {
        let j = i + rng.random_range(0..(total - i));
        indices.swap(i, j);
    }
    let mut chosen = indices[..count].to_vec();
    chosen.sort_unstable();
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::run_rng;

    #[test]
    fn generate_zero_is_empty_and_seeds_reproduce() {
        let mut rng = run_rng(40);
        assert!(generate(0, &mut rng).is_empty());
        let a = generate(64, &mut run_rng(41));
        let b = generate(64, &mut run_rng(41));
        assert_eq!(a, b);
    }

    #[test]
    fn generate_labels_are_uniform() {
        let mut rng = run_rng(42);
        let records = generate(100_000, &mut rng);
        let mut counts = [0u32; 4];
        for r in &records {
            let slot = PrepLabel::ALL.iter().position(|&l| l == r.prepared).unwrap();
            counts[slot] += 1;
        }
        for count in counts {
            let freq = f64::from(count) / 100_000.0;
            assert!((freq - 0.25).abs() <= 0.005, "freq = {freq}");
        }
    }

    #[test]
    fn insert_edge_cases() {
        let mut rng = run_rng(43);
        let (merged, positions) = insert::<u8>(vec![1, 2, 3], vec![], &mut rng);
        assert_eq!(merged, vec![1, 2, 3]);
        assert!(positions.is_empty());

        let (merged, positions) = insert::<u8>(vec![], vec![7, 8], &mut rng);
        assert_eq!(merged, vec![7, 8]);
        assert_eq!(positions, vec![0, 1]);
    }

    #[test]
    fn insert_preserves_relative_order() {
        let mut rng = run_rng(44);
        for _ in 0..500 {
            let code: Vec<i32> = (0..6).collect();
            let decoys: Vec<i32> = (100..104).collect();
            let (merged, positions) = insert(code.clone(), decoys.clone(), &mut rng);
            assert_eq!(merged.len(), 10);
            let kept: Vec<i32> = merged.iter().copied().filter(|v| *v < 100).collect();
            assert_eq!(kept, code);
            let placed: Vec<i32> = positions.iter().map(|&p| merged[p]).collect();
            assert_eq!(placed, decoys);
        }
    }

    #[test]
    fn single_code_qubit_lands_uniformly() {
        // The 1/(k+1) uniformity that caps a blind flip's success odds.
        let mut rng = run_rng(45);
        let k = 9usize;
        let trials = 100_000u32;
        let mut hits = vec![0u32; k + 1];
        for _ in 0..trials {
            let (merged, _) = insert(vec![usize::MAX], (0..k).collect(), &mut rng);
            let pos = merged.iter().position(|&v| v == usize::MAX).unwrap();
            hits[pos] += 1;
        }
        let expect = f64::from(trials) / (k as f64 + 1.0);
        let sigma = (f64::from(trials) * (1.0 / (k as f64 + 1.0)) * (k as f64 / (k as f64 + 1.0)))
            .sqrt();
        for (slot, &count) in hits.iter().enumerate() {
            assert!(
                (f64::from(count) - expect).abs() <= 3.0 * sigma,
                "slot {slot}: {count} vs {expect} ± {sigma}"
            );
        }
    }

    #[test]
    fn verify_conflict_rules() {
        let policy = CheckPolicy::ideal();
        let ok = DecoyRecord::new(0, PrepLabel::Zero).with_measurement(Basis::Z, false);
        let bad = DecoyRecord::new(1, PrepLabel::Zero).with_measurement(Basis::Z, true);
        let cross = DecoyRecord::new(2, PrepLabel::Zero).with_measurement(Basis::X, true);

        assert_eq!(verify(&[ok], &policy).unwrap(), CheckOutcome::Pass);
        assert_eq!(
            verify(&[ok, bad], &policy).unwrap(),
            CheckOutcome::FailAt { position: 1 }
        );
        // Basis mismatch carries no information.
        assert_eq!(verify(&[cross], &policy).unwrap(), CheckOutcome::Pass);
    }

    #[test]
    fn verify_requires_measurement_data() {
        let unmeasured = DecoyRecord::new(3, PrepLabel::Plus);
        assert_eq!(
            verify(&[unmeasured], &CheckPolicy::ideal()),
            Err(DecoyError::MissingMeasurement(3))
        );
    }

    #[test]
    fn batch_threshold_tolerates_low_rates() {
        let records: Vec<DecoyRecord> = (0..10)
            .map(|i| {
                DecoyRecord::new(i, PrepLabel::Zero).with_measurement(Basis::Z, i == 0)
            })
            .collect();
        // One conflict in ten same-basis records.
        assert_eq!(
            verify(&records, &CheckPolicy::batch(0.2)).unwrap(),
            CheckOutcome::Pass
        );
        assert!(matches!(
            verify(&records, &CheckPolicy::batch(0.05)).unwrap(),
            CheckOutcome::FailRate { .. }
        ));
    }

    #[test]
    fn choose_checked_counts() {
        let mut rng = run_rng(46);
        assert_eq!(choose_checked(8, 0.5, &mut rng).len(), 4);
        assert_eq!(choose_checked(8, 1.0, &mut rng).len(), 8);
        assert!(choose_checked(0, 0.5, &mut rng).is_empty());
        let chosen = choose_checked(16, 0.5, &mut rng);
        assert!(chosen.windows(2).all(|w| w[0] < w[1]));
    }
}
