//! Experiment configuration: defaults, optional config file, flag
//! overrides, and validation into typed run parameters.
//!
//! Precedence is flags over config-file values over defaults. The fully
//! resolved configuration is embedded in every output so a run can be
//! reproduced from its own artifact.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use qpc_core::adversary::{AttackStrategy, InternalPolicy};
use qpc_core::coinflip::CfStrategy;
use qpc_core::hashperm::{BitString, PermKey, MAX_BITS};
use qpc_core::qstate::Basis;
use qpc_core::simnet::{PartyId, Schedule};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config file: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Which experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    /// Grouped Bell-pair comparison, first group only (the original,
    /// incorrect formulation).
    Wcwz,
    /// Grouped Bell-pair comparison iterating over all groups.
    WcwzFixed,
    /// Bit-by-bit single-qubit comparison.
    Improved,
    /// XOR coin flipping.
    Coinflip,
}

impl Protocol {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        match text {
            "wcwz" => Ok(Protocol::Wcwz),
            "wcwz-fixed" => Ok(Protocol::WcwzFixed),
            "improved" => Ok(Protocol::Improved),
            "coinflip" => Ok(Protocol::Coinflip),
            other => Err(ConfigError::Invalid(format!(
                "unknown protocol {other:?}; expected wcwz, wcwz-fixed, improved, or coinflip"
            ))),
        }
    }
}

/// Serializable experiment configuration. String-typed fields keep the
/// file format and flag grammar identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: String,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    /// Interception probability for the intercept-resend attack.
    pub alpha: f64,
    pub attack: String,
    pub schedule: String,
    pub trials: u64,
    pub seed: u64,
    /// 32 hex characters; derived from the seed when absent.
    pub hash_key: Option<String>,
    pub hash_rounds: u32,
    pub threshold: f64,
    pub check_fraction: f64,
    /// Fixed inputs; random per trial when absent.
    pub a: Option<String>,
    pub b: Option<String>,
    /// Coin-flipping strategies.
    pub alice: String,
    pub bob: String,
    pub format: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            protocol: "improved".into(),
            n: 8,
            m: 2,
            k: 8,
            alpha: 1.0,
            attack: "none".into(),
            schedule: "simultaneous".into(),
            trials: 1_000,
            seed: 7,
            hash_key: None,
            hash_rounds: 4,
            threshold: 0.0,
            check_fraction: 0.5,
            a: None,
            b: None,
            alice: "honest".into(),
            bob: "honest".into(),
            format: "json".into(),
        }
    }
}

/// Flag-level overrides; `None` leaves the underlying value alone.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub protocol: Option<String>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub k: Option<usize>,
    pub alpha: Option<f64>,
    pub attack: Option<String>,
    pub schedule: Option<String>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub hash_key: Option<String>,
    pub hash_rounds: Option<u32>,
    pub threshold: Option<f64>,
    pub check_fraction: Option<f64>,
    pub a: Option<String>,
    pub b: Option<String>,
    pub alice: Option<String>,
    pub bob: Option<String>,
    pub format: Option<String>,
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic default permutation key for a master seed.
fn derive_key_seed(seed: u64) -> u128 {
    let lo = mix64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let hi = mix64(seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    (u128::from(hi) << 64) | u128::from(lo)
}

impl ExperimentConfig {
    /// Defaults ← config file ← flag overrides, then the hash key is
    /// pinned so the resolved config reproduces the run by itself.
    pub fn resolve(
        file: Option<&std::path::Path>,
        overrides: &ConfigOverrides,
    ) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = match file {
            Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! take {
            ($field:ident) => {
                if let Some(value) = overrides.$field.clone() {
                    cfg.$field = value;
                }
            };
            (opt $field:ident) => {
                if overrides.$field.is_some() {
                    cfg.$field = overrides.$field.clone();
                }
            };
        }
        take!(protocol);
        take!(n);
        take!(m);
        take!(k);
        take!(alpha);
        take!(attack);
        take!(schedule);
        take!(trials);
        take!(seed);
        take!(opt hash_key);
        take!(hash_rounds);
        take!(threshold);
        take!(check_fraction);
        take!(opt a);
        take!(opt b);
        take!(alice);
        take!(bob);
        take!(format);
        if cfg.hash_key.is_none() {
            cfg.hash_key = Some(format!("{:032x}", derive_key_seed(cfg.seed)));
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<ResolvedExperiment, ConfigError> {
        ResolvedExperiment::from_config(self)
    }
}

/// Typed view of a validated configuration.
#[derive(Debug, Clone)]
pub struct ResolvedExperiment {
    pub protocol: Protocol,
    pub config: ExperimentConfig,
    pub attack: AttackStrategy,
    pub schedule: Schedule,
    pub hash_key: PermKey,
    pub fixed_inputs: Option<(BitString, BitString)>,
    pub alice: CfStrategy,
    pub bob: CfStrategy,
}

fn parse_party(text: &str) -> Result<PartyId, ConfigError> {
    match text {
        "alice" => Ok(PartyId::Alice),
        "bob" => Ok(PartyId::Bob),
        other => Err(ConfigError::Invalid(format!("unknown party {other:?}"))),
    }
}

pub fn parse_schedule(text: &str) -> Result<Schedule, ConfigError> {
    match text.split_once(':') {
        None if text == "simultaneous" => Ok(Schedule::Simultaneous),
        Some(("ordered", party)) => Ok(Schedule::Ordered {
            first: parse_party(party)?,
        }),
        _ => Err(ConfigError::Invalid(format!(
            "unknown schedule {text:?}; expected simultaneous, ordered:alice, or ordered:bob"
        ))),
    }
}

pub fn parse_attack(text: &str, default_alpha: f64) -> Result<AttackStrategy, ConfigError> {
    let mut parts = text.split(':');
    let head = parts.next().unwrap_or_default();
    let rest: Vec<&str> = parts.collect();
    let attack = match (head, rest.as_slice()) {
        ("none", []) => AttackStrategy::NoAttack,
        ("intercept", []) => AttackStrategy::InterceptResend {
            alpha: default_alpha,
        },
        ("intercept", [alpha]) => AttackStrategy::InterceptResend {
            alpha: alpha
                .parse()
                .map_err(|_| ConfigError::Invalid(format!("bad interception rate {alpha:?}")))?,
        },
        ("guessbasis", []) => AttackStrategy::GuessBasisReturn { guess: None },
        ("guessbasis", ["z"]) => AttackStrategy::GuessBasisReturn {
            guess: Some(Basis::Z),
        },
        ("guessbasis", ["x"]) => AttackStrategy::GuessBasisReturn {
            guess: Some(Basis::X),
        },
        ("xflip", [count]) => AttackStrategy::XFlip {
            count: count
                .parse()
                .map_err(|_| ConfigError::Invalid(format!("bad flip count {count:?}")))?,
        },
        ("internal", [party, policy]) => {
            let policy = match *policy {
                "altercode" => InternalPolicy::AlterCodeBit,
                "postdisclosure" => InternalPolicy::PostDisclosureBitChange,
                other => {
                    return Err(ConfigError::Invalid(format!(
                        "unknown internal policy {other:?}; expected altercode or postdisclosure"
                    )))
                }
            };
            AttackStrategy::InternalDelayAbort {
                party: parse_party(party)?,
                policy,
            }
        }
        _ => {
            return Err(ConfigError::Invalid(format!(
                "unknown attack {text:?}; expected none, intercept[:p], guessbasis[:z|x], \
                 xflip:<count>, or internal:<party>:<policy>"
            )))
        }
    };
    attack.validate().map_err(ConfigError::Invalid)?;
    Ok(attack)
}

pub fn parse_cf_strategy(text: &str) -> Result<CfStrategy, ConfigError> {
    match text.split_once(':') {
        None if text == "honest" => Ok(CfStrategy::Honest),
        Some(("adaptive", bit)) => Ok(CfStrategy::AdaptiveSecondMover {
            target: match bit {
                "0" => false,
                "1" => true,
                other => {
                    return Err(ConfigError::Invalid(format!(
                        "adaptive target must be 0 or 1, got {other:?}"
                    )))
                }
            },
        }),
        _ => Err(ConfigError::Invalid(format!(
            "unknown strategy {text:?}; expected honest or adaptive:<0|1>"
        ))),
    }
}

impl ResolvedExperiment {
    fn from_config(cfg: &ExperimentConfig) -> Result<Self, ConfigError> {
        let protocol = Protocol::parse(&cfg.protocol)?;
        let schedule = parse_schedule(&cfg.schedule)?;
        let attack = parse_attack(&cfg.attack, cfg.alpha)?;
        let alice = parse_cf_strategy(&cfg.alice)?;
        let bob = parse_cf_strategy(&cfg.bob)?;
        let key_hex = cfg.hash_key.as_deref().ok_or_else(|| {
            ConfigError::Invalid("hash key must be resolved before validation".into())
        })?;
        let hash_key = PermKey::from_hex(key_hex, cfg.hash_rounds)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;

        if cfg.trials == 0 {
            return Err(ConfigError::Invalid("at least one trial is required".into()));
        }
        if protocol != Protocol::Coinflip {
            if cfg.n == 0 || cfg.n > MAX_BITS {
                return Err(ConfigError::Invalid(format!(
                    "n must lie in 1..={MAX_BITS}, got {}",
                    cfg.n
                )));
            }
            if !(0.0..=1.0).contains(&cfg.alpha) {
                return Err(ConfigError::Invalid(format!(
                    "alpha must lie in [0, 1], got {}",
                    cfg.alpha
                )));
            }
        }
        let uses_groups = matches!(protocol, Protocol::Wcwz | Protocol::WcwzFixed);
        if uses_groups && (cfg.m < 1 || cfg.m > cfg.n) {
            return Err(ConfigError::Invalid(format!(
                "m must satisfy 1 ≤ m ≤ n, got m={}, n={}",
                cfg.m, cfg.n
            )));
        }
        if protocol == Protocol::Improved && cfg.k < 1 {
            return Err(ConfigError::Invalid(
                "the bit-by-bit protocol needs at least one decoy per direction".into(),
            ));
        }
        if !matches!(cfg.format.as_str(), "json" | "csv") {
            return Err(ConfigError::Invalid(format!(
                "unknown format {:?}; expected json or csv",
                cfg.format
            )));
        }

        let fixed_inputs = match (&cfg.a, &cfg.b) {
            (None, None) => None,
            (Some(a), Some(b)) => {
                let a = BitString::parse(a).map_err(|e| ConfigError::Invalid(e.to_string()))?;
                let b = BitString::parse(b).map_err(|e| ConfigError::Invalid(e.to_string()))?;
                if a.len() != cfg.n || b.len() != cfg.n {
                    return Err(ConfigError::Invalid(format!(
                        "fixed inputs must be {} bits, got {} and {}",
                        cfg.n,
                        a.len(),
                        b.len()
                    )));
                }
                Some((a, b))
            }
            _ => {
                return Err(ConfigError::Invalid(
                    "fixed inputs need both --a and --b".into(),
                ))
            }
        };

        if protocol != Protocol::Coinflip
            && matches!(attack, AttackStrategy::AdaptiveSecondMover { .. })
        {
            return Err(ConfigError::Invalid(
                "the adaptive second mover only applies to coin flipping".into(),
            ));
        }

        Ok(ResolvedExperiment {
            protocol,
            config: cfg.clone(),
            attack,
            schedule,
            hash_key,
            fixed_inputs,
            alice,
            bob,
        })
    }
}
