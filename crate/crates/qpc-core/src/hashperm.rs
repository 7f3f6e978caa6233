//! Keyed length-preserving bijection on bit strings.
//!
//! Both parties hash their inputs through the same shared keyed
//! permutation before comparing. The construction is a Feistel network
//! over ⌈n/2⌉/⌊n/2⌋ halves whose round function is derived from a seeded
//! generator keyed on (key seed, round index, right-half value), which
//! guarantees a bijection for every length including odd n. A
//! zero-round key is the identity permutation, handy for building test
//! vectors with known hash bits. No cryptographic strength is claimed.

use rand::{RngExt, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::RunRng;

/// Practical cap on input length.
pub const MAX_BITS: usize = 1 << 24;

/// Default number of Feistel rounds.
pub const DEFAULT_ROUNDS: u32 = 4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HashPermError {
    #[error("input bit string must be nonempty")]
    EmptyInput,
    #[error("input of {0} bits exceeds the {MAX_BITS}-bit cap")]
    TooLong(usize),
    #[error("key must be exactly 32 hex characters, got {0:?}")]
    BadKeyHex(String),
    #[error("bit strings contain only '0' and '1', got {0:?}")]
    BadBitChar(char),
}

/// Key for the shared permutation: a 128-bit seed plus a round count.
/// Serialized in configs as 32 hex characters and a round count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermKey {
    #[serde(with = "hex_u128")]
    pub seed: u128,
    pub rounds: u32,
}

impl PermKey {
    pub fn new(seed: u128, rounds: u32) -> Self {
        PermKey { seed, rounds }
    }

    /// The identity permutation, for constructing protocol test vectors.
    pub fn identity() -> Self {
        PermKey { seed: 0, rounds: 0 }
    }

    pub fn from_hex(hex: &str, rounds: u32) -> Result<Self, HashPermError> {
        if hex.len() != 32 {
            return Err(HashPermError::BadKeyHex(hex.to_string()));
        }
        let seed =
            u128::from_str_radix(hex, 16).map_err(|_| HashPermError::BadKeyHex(hex.to_string()))?;
        Ok(PermKey { seed, rounds })
    }

    pub fn to_hex(&self) -> String {
        format!("{:032x}", self.seed)
    }
}

mod hex_u128 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u128, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{v:032x}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u128, D::Error> {
        let text = String::deserialize(d)?;
        u128::from_str_radix(&text, 16).map_err(serde::de::Error::custom)
    }
}

/// Ordered sequence of bits, most significant written first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    pub fn zeros(n: usize) -> Self {
        BitString(vec![false; n])
    }

    /// Uniformly random n-bit string.
    pub fn random(n: usize, rng: &mut RunRng) -> Self {
        BitString((0..n).map(|_| rng.random::<bool>()).collect())
    }

    /// Low `n` bits of `value`, most significant first.
    pub fn from_value(value: u64, n: usize) -> Self {
        BitString((0..n).rev().map(|i| (value >> i) & 1 == 1).collect())
    }

    pub fn parse(text: &str) -> Result<Self, HashPermError> {
        if text.is_empty() {
            return Err(HashPermError::EmptyInput);
        }
        let mut bits = Vec::with_capacity(text.len());
        for ch in text.chars() {
            match ch {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => return Err(HashPermError::BadBitChar(other)),
            }
        }
        Ok(BitString(bits))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.0
    }
}

impl std::fmt::Display for BitString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in &self.0 {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for BitString {
    type Err = HashPermError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BitString::parse(s)
    }
}

const FNV_OFFSET_A: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_OFFSET_B: u64 = 0x8422_2325_cbf2_9ce4;
const FNV_PRIME: u64 = 0x1000_0000_01b3;

/// Round function: folds the right half into a generator seed together
/// with the key and round index, then draws `out_len` bits.
fn round_bits(seed: u128, round: u32, input: &[bool], out_len: usize) -> Vec<bool> {
    let tweak = u64::from(round).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    let mut h0 = FNV_OFFSET_A ^ tweak;
    let mut h1 = FNV_OFFSET_B ^ tweak.rotate_left(31);
    for chunk in input.chunks(8) {
        let mut byte = 0u64;
        for (i, &bit) in chunk.iter().enumerate() {
            if bit {
                byte |= 1 << i;
            }
        }
        h0 = (h0 ^ byte).wrapping_mul(FNV_PRIME);
        h1 = (h1 ^ byte.wrapping_add(1)).wrapping_mul(FNV_PRIME);
    }
    let mut bytes = [0u8; 32];
    bytes[..16].copy_from_slice(&seed.to_le_bytes());
    bytes[16..24].copy_from_slice(&h0.to_le_bytes());
    bytes[24..32].copy_from_slice(&h1.to_le_bytes());
    let mut rng = RunRng::from_seed(bytes);
    (0..out_len).map(|_| rng.random::<bool>()).collect()
}

fn check_input(x: &BitString) -> Result<(), HashPermError> {
    if x.is_empty() {
        return Err(HashPermError::EmptyInput);
    }
    if x.len() > MAX_BITS {
        return Err(HashPermError::TooLong(x.len()));
    }
    Ok(())
}

/// Half sizes alternate each round; this is the left size after `round`
/// rounds of an n-bit string.
fn left_len(n: usize, round: u32) -> usize {
    if round.is_multiple_of(2) {
        n.div_ceil(2)
    } else {
        n / 2
    }
}

/// Apply the keyed bijection.
pub fn hash(x: &BitString, key: &PermKey) -> Result<BitString, HashPermError> {
    check_input(x)?;
    let n = x.len();
    let (mut left, mut right): (Vec<bool>, Vec<bool>) = {
        let (l, r) = x.bits().split_at(left_len(n, 0));
        (l.to_vec(), r.to_vec())
    };
    for round in 0..key.rounds {
        let f = round_bits(key.seed, round, &right, left.len());
        let new_right: Vec<bool> = left.iter().zip(f).map(|(&l, fb)| l ^ fb).collect();
        left = right;
        right = new_right;
    }
    let mut out = left;
    out.extend(right);
    Ok(BitString::new(out))
}

/// Invert the keyed bijection: `invert(hash(x, key), key) == x`.
pub fn invert(y: &BitString, key: &PermKey) -> Result<BitString, HashPermError> {
    check_input(y)?;
    let n = y.len();
    let (mut left, mut right): (Vec<bool>, Vec<bool>) = {
        let (l, r) = y.bits().split_at(left_len(n, key.rounds));
        (l.to_vec(), r.to_vec())
    };
    for round in (0..key.rounds).rev() {
        let f = round_bits(key.seed, round, &left, right.len());
        let new_left: Vec<bool> = right.iter().zip(f).map(|(&r, fb)| r ^ fb).collect();
        right = left;
        left = new_left;
    }
    let mut out = left;
    out.extend(right);
    Ok(BitString::new(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::run_rng;
    use std::collections::HashSet;

    #[test]
    fn rejects_empty_input() {
        let key = PermKey::new(5, 4);
        assert_eq!(
            hash(&BitString::new(vec![]), &key),
            Err(HashPermError::EmptyInput)
        );
        assert_eq!(
            invert(&BitString::new(vec![]), &key),
            Err(HashPermError::EmptyInput)
        );
    }

    #[test]
    fn identity_key_is_identity() {
        let mut rng = run_rng(11);
        for n in [1usize, 2, 7, 33] {
            let x = BitString::random(n, &mut rng);
            assert_eq!(hash(&x, &PermKey::identity()).unwrap(), x);
            assert_eq!(invert(&x, &PermKey::identity()).unwrap(), x);
        }
    }

    #[test]
    fn n8_outputs_pairwise_distinct() {
        // Exhaustive enumeration oracle: a bijection on 8 bits hits all
        // 256 outputs exactly once.
        let key = PermKey::new(0xfeed_beef_1234, 4);
        let mut seen = HashSet::new();
        for v in 0u64..256 {
            let y = hash(&BitString::from_value(v, 8), &key).unwrap();
            assert!(seen.insert(y.to_string()));
        }
        assert_eq!(seen.len(), 256);
    }

    #[test]
    fn bijective_for_all_small_lengths() {
        for n in 1..=12usize {
            let key = PermKey::new(0x1000 + n as u128, 4);
            let mut seen = HashSet::new();
            for v in 0u64..(1 << n) {
                let y = hash(&BitString::from_value(v, n), &key).unwrap();
                assert_eq!(y.len(), n);
                assert!(seen.insert(y.to_string()), "collision at n={n}, v={v}");
            }
        }
    }

    #[test]
    fn n4_inverse_table_composes_to_identity() {
        let key = PermKey::new(0xabcdef, 4);
        let mut forward = [0usize; 16];
        for v in 0u64..16 {
            let y = hash(&BitString::from_value(v, 4), &key).unwrap();
            let packed = y
                .bits()
                .iter()
                .fold(0usize, |acc, &b| (acc << 1) | usize::from(b));
            forward[v as usize] = packed;
        }
        for v in 0u64..16 {
            let x = invert(&BitString::from_value(forward[v as usize] as u64, 4), &key).unwrap();
            let packed = x
                .bits()
                .iter()
                .fold(0usize, |acc, &b| (acc << 1) | usize::from(b));
            assert_eq!(packed, v as usize);
        }
    }

    #[test]
    fn random_round_trips() {
        let mut rng = run_rng(12);
        for _ in 0..10_000 {
            let n = 1 + rng.random_range(0..48usize);
            let key = PermKey::new(rng.random::<u64>() as u128, 1 + rng.random_range(0..6));
            let x = BitString::random(n, &mut rng);
            let y = hash(&x, &key).unwrap();
            assert_eq!(y.len(), n);
            assert_eq!(invert(&y, &key).unwrap(), x);
        }
    }

    #[test]
    fn deterministic_in_key_and_input() {
        let key = PermKey::new(42, 4);
        let x = BitString::parse("1011001110001").unwrap();
        assert_eq!(hash(&x, &key).unwrap(), hash(&x, &key).unwrap());
    }

    #[test]
    fn per_position_agreement_is_balanced() {
        // Statistical check of the i.i.d.-uniform modeling assumption:
        // over random input pairs the hash bits agree at each position
        // with frequency 1/2.
        let mut rng = run_rng(13);
        let key = PermKey::new(rng.random::<u64>() as u128, 4);
        let n = 16;
        let pairs = 10_000u32;
        let mut agree = vec![0u32; n];
        for _ in 0..pairs {
            let x = BitString::random(n, &mut rng);
            let y = BitString::random(n, &mut rng);
            let hx = hash(&x, &key).unwrap();
            let hy = hash(&y, &key).unwrap();
            for (slot, (hx_bit, hy_bit)) in hx.bits().iter().zip(hy.bits()).enumerate() {
                if hx_bit == hy_bit {
                    agree[slot] += 1;
                }
            }
        }
        for (i, &count) in agree.iter().enumerate() {
            let freq = f64::from(count) / f64::from(pairs);
            assert!((freq - 0.5).abs() <= 0.02, "position {i}: {freq}");
        }
    }

    #[test]
    fn key_hex_round_trip() {
        let key = PermKey::new(0x0123_4567_89ab_cdef_0011_2233_4455_6677, 4);
        let hex = key.to_hex();
        assert_eq!(hex.len(), 32);
        assert_eq!(PermKey::from_hex(&hex, 4).unwrap(), key);
        assert!(PermKey::from_hex("zz", 4).is_err());
    }
}
