//! Experiment execution and summary emission.
//!
//! A run executes `trials` independent protocol runs (parallel at the
//! trial boundary when the `parallel` feature is on) and aggregates
//! verdict counts, the abort-round histogram, empirical leakage, and
//! resource counters. The resolved configuration is embedded in the
//! summary; identical configurations produce byte-identical output.

use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

use qpc_core::analytics::{self, AbortHistogram};
use qpc_core::coinflip::{run_cf, BiasEstimate};
use qpc_core::hashperm::BitString;
use qpc_core::improved::{run_improved, ImprovedParams};
use qpc_core::outcome::Outcome;
use qpc_core::simnet::Counters;
use qpc_core::trials::run_trials;
use qpc_core::wcwz::{run_wcwz, WcwzParams};

use crate::config::{ExperimentConfig, Protocol, ResolvedExperiment};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error("run failed: {0}")]
    Run(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct VerdictCounts {
    pub equal: u64,
    pub differ: u64,
    pub eve_detected: u64,
    pub inconsistent: u64,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct ResourceTotals {
    pub qubits_sent_total: u64,
    pub bell_pairs_total: u64,
    pub decoys_total: u64,
    /// Largest peak over any single trial.
    pub peak_storage_max: u64,
    pub entangled_halves_total: u64,
}

impl ResourceTotals {
    fn absorb(&mut self, counters: &Counters) {
        self.qubits_sent_total += counters.qubits_sent;
        self.bell_pairs_total += counters.bell_pairs_used;
        self.decoys_total += counters.decoys_used;
        self.entangled_halves_total += counters.entangled_halves_sent;
        self.peak_storage_max = self.peak_storage_max.max(counters.qubits_stored_max);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoinflipSummary {
    pub zeros: u64,
    pub ones: u64,
    pub p_zero: f64,
    pub bias: f64,
    pub std_err: f64,
}

/// Everything a comparison run reports.
#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub config: ExperimentConfig,
    pub trials: u64,
    pub verdicts: VerdictCounts,
    /// Differ outcomes keyed by 1-based round, sorted.
    pub abort_histogram: BTreeMap<usize, u64>,
    pub full_matches: u64,
    pub empirical_leakage_bits: Option<f64>,
    pub empirical_leakage_std_err: Option<f64>,
    pub analytic_leakage_bits: Option<f64>,
    pub resources: ResourceTotals,
    /// Equal verdicts on trials whose inputs actually differed.
    pub incorrect_equal_verdicts: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coinflip: Option<CoinflipSummary>,
}

pub struct ExperimentOutput {
    pub summary: String,
    pub transcripts: Option<String>,
    pub eve_detected_runs: u64,
}

struct TrialRecord {
    outcome: Outcome,
    wrong_equal: bool,
    counters: Counters,
    transcript_jsonl: Option<String>,
}

fn comparison_trials(
    resolved: &ResolvedExperiment,
    with_transcripts: bool,
) -> Result<Vec<TrialRecord>, CliError> {
    let cfg = &resolved.config;
    let protocol = resolved.protocol;
    let attack = resolved.attack;
    let hash_key = resolved.hash_key;
    let schedule = resolved.schedule;
    let fixed = resolved.fixed_inputs.clone();
    let n = cfg.n;

    let wcwz_params = |fixed_variant: bool| WcwzParams {
        n,
        m: cfg.m,
        k: cfg.k,
        fixed: fixed_variant,
        threshold: cfg.threshold,
        hash_key,
    };
    let improved_params = ImprovedParams {
        n,
        k: cfg.k,
        check_fraction: cfg.check_fraction,
        threshold: cfg.threshold,
        schedule,
        hash_key,
    };

    // Fail fast on configurations the state machines reject, so the
    // error surfaces as a config diagnostic rather than a mid-batch
    // panic.
    {
        let mut rng = qpc_core::rng::trial_rng(cfg.seed, 0);
        let a = BitString::zeros(n);
        let probe = match protocol {
            Protocol::Wcwz => run_wcwz(&a, &a, &wcwz_params(false), &attack, &mut rng)
                .map(|_| ())
                .map_err(|e| e.to_string()),
            Protocol::WcwzFixed => run_wcwz(&a, &a, &wcwz_params(true), &attack, &mut rng)
                .map(|_| ())
                .map_err(|e| e.to_string()),
            Protocol::Improved => run_improved(&a, &a, &improved_params, &attack, &mut rng)
                .map(|_| ())
                .map_err(|e| e.to_string()),
            Protocol::Coinflip => unreachable!("handled by coinflip_trials"),
        };
        probe.map_err(CliError::Run)?;
    }

    let records = run_trials(cfg.trials, cfg.seed, move |_, rng| {
        let (a, b) = match &fixed {
            Some((a, b)) => (a.clone(), b.clone()),
            None => (BitString::random(n, rng), BitString::random(n, rng)),
        };
        let (outcome, transcript) = match protocol {
            Protocol::Wcwz => run_wcwz(&a, &b, &wcwz_params(false), &attack, rng),
            Protocol::WcwzFixed => run_wcwz(&a, &b, &wcwz_params(true), &attack, rng),
            Protocol::Improved => run_improved(&a, &b, &improved_params, &attack, rng)
                .map_err(|e| qpc_core::wcwz::WcwzError::InvalidParams(e.to_string())),
            Protocol::Coinflip => unreachable!("handled by coinflip_trials"),
        }
        .expect("probed configuration");
        TrialRecord {
            wrong_equal: outcome == Outcome::Equal && a != b,
            counters: transcript.counters,
            transcript_jsonl: with_transcripts.then(|| transcript.to_jsonl()),
            outcome,
        }
    });
    Ok(records)
}

fn summarize_comparison(
    resolved: &ResolvedExperiment,
    records: &[TrialRecord],
) -> (RunSummary, u64) {
    let cfg = &resolved.config;
    let mut verdicts = VerdictCounts::default();
    let mut resources = ResourceTotals::default();
    let mut incorrect_equal = 0u64;
    let outcomes: Vec<Outcome> = records.iter().map(|r| r.outcome.clone()).collect();
    for record in records {
        match record.outcome {
            Outcome::Equal => verdicts.equal += 1,
            Outcome::Differ { .. } => verdicts.differ += 1,
            Outcome::EveDetected { .. } => verdicts.eve_detected += 1,
            Outcome::Inconsistent => verdicts.inconsistent += 1,
        }
        if record.wrong_equal {
            incorrect_equal += 1;
        }
        resources.absorb(&record.counters);
    }

    let m = match resolved.protocol {
        Protocol::Improved => 1,
        _ => cfg.m as u32,
    };
    let report = analytics::leakage_report(&outcomes, cfg.n as u64, m, cfg.seed).ok();
    // The closed form models the iterating variants; the original
    // single-group protocol gets no analytic column.
    let analytic = match resolved.protocol {
        Protocol::Improved | Protocol::WcwzFixed => {
            report.as_ref().and_then(|r| r.analytic_bits)
        }
        _ => None,
    };
    let empirical = report.map(|r| r.empirical);
    let histogram = empirical
        .as_ref()
        .map(|e| e.histogram.clone())
        .unwrap_or_else(|| AbortHistogram {
            trials: records.len() as u64,
            ..AbortHistogram::default()
        });
    let note = (resolved.protocol == Protocol::Wcwz && incorrect_equal > 0).then(|| {
        format!(
            "{incorrect_equal} trial(s) reported 'equal' for unequal inputs: the original \
             single-group variant compares only the first group"
        )
    });
    let eve_detected_runs = verdicts.eve_detected;
    (
        RunSummary {
            config: cfg.clone(),
            trials: records.len() as u64,
            verdicts,
            abort_histogram: histogram.counts.clone(),
            full_matches: histogram.full_matches,
            empirical_leakage_bits: empirical.as_ref().map(|e| e.bits),
            empirical_leakage_std_err: empirical.as_ref().map(|e| e.std_err),
            analytic_leakage_bits: analytic,
            resources,
            incorrect_equal_verdicts: incorrect_equal,
            note,
            coinflip: None,
        },
        eve_detected_runs,
    )
}

fn coinflip_summary(resolved: &ResolvedExperiment) -> Result<RunSummary, CliError> {
    let cfg = &resolved.config;
    let schedule = resolved.schedule;
    let (alice, bob) = (resolved.alice, resolved.bob);
    // Validate strategy/schedule once up front.
    {
        let mut rng = qpc_core::rng::trial_rng(cfg.seed, 0);
        run_cf(schedule, alice, bob, &mut rng).map_err(|e| CliError::Run(e.to_string()))?;
    }
    let zeros = run_trials(cfg.trials, cfg.seed, move |_, rng| {
        !run_cf(schedule, alice, bob, rng).expect("validated configuration")
    })
    .into_iter()
    .filter(|&z| z)
    .count() as u64;
    let p_zero = zeros as f64 / cfg.trials as f64;
    let estimate = BiasEstimate {
        bias: (p_zero - 0.5).abs(),
        p_zero,
        std_err: (p_zero * (1.0 - p_zero) / cfg.trials as f64).sqrt(),
        trials: cfg.trials,
    };
    Ok(RunSummary {
        config: cfg.clone(),
        trials: cfg.trials,
        verdicts: VerdictCounts::default(),
        abort_histogram: BTreeMap::new(),
        full_matches: 0,
        empirical_leakage_bits: None,
        empirical_leakage_std_err: None,
        analytic_leakage_bits: None,
        resources: ResourceTotals::default(),
        incorrect_equal_verdicts: 0,
        note: None,
        coinflip: Some(CoinflipSummary {
            zeros,
            ones: cfg.trials - zeros,
            p_zero,
            bias: estimate.bias,
            std_err: estimate.std_err,
        }),
    })
}

fn render_summary(summary: &RunSummary, format: &str) -> String {
    match format {
        "csv" => {
            let mut out = String::from("metric,value\n");
            let mut push = |key: &str, value: String| {
                out.push_str(key);
                out.push(',');
                out.push_str(&value);
                out.push('\n');
            };
            push("config.protocol", summary.config.protocol.clone());
            push("config.n", summary.config.n.to_string());
            push("config.m", summary.config.m.to_string());
            push("config.k", summary.config.k.to_string());
            push("config.alpha", summary.config.alpha.to_string());
            push("config.attack", summary.config.attack.clone());
            push("config.schedule", summary.config.schedule.clone());
            push("config.trials", summary.config.trials.to_string());
            push("config.seed", summary.config.seed.to_string());
            push(
                "config.hash_key",
                summary.config.hash_key.clone().unwrap_or_default(),
            );
            push("config.hash_rounds", summary.config.hash_rounds.to_string());
            push("config.threshold", summary.config.threshold.to_string());
            push(
                "config.check_fraction",
                summary.config.check_fraction.to_string(),
            );
            push("trials", summary.trials.to_string());
            push("verdicts.equal", summary.verdicts.equal.to_string());
            push("verdicts.differ", summary.verdicts.differ.to_string());
            push(
                "verdicts.eve_detected",
                summary.verdicts.eve_detected.to_string(),
            );
            push(
                "verdicts.inconsistent",
                summary.verdicts.inconsistent.to_string(),
            );
            for (round, count) in &summary.abort_histogram {
                push(&format!("abort_round_{round}"), count.to_string());
            }
            push("full_matches", summary.full_matches.to_string());
            if let Some(bits) = summary.empirical_leakage_bits {
                push("empirical_leakage_bits", bits.to_string());
            }
            if let Some(se) = summary.empirical_leakage_std_err {
                push("empirical_leakage_std_err", se.to_string());
            }
            if let Some(bits) = summary.analytic_leakage_bits {
                push("analytic_leakage_bits", bits.to_string());
            }
            push(
                "resources.qubits_sent_total",
                summary.resources.qubits_sent_total.to_string(),
            );
            push(
                "resources.bell_pairs_total",
                summary.resources.bell_pairs_total.to_string(),
            );
            push(
                "resources.decoys_total",
                summary.resources.decoys_total.to_string(),
            );
            push(
                "resources.peak_storage_max",
                summary.resources.peak_storage_max.to_string(),
            );
            push(
                "incorrect_equal_verdicts",
                summary.incorrect_equal_verdicts.to_string(),
            );
            if let Some(cf) = &summary.coinflip {
                push("coinflip.zeros", cf.zeros.to_string());
                push("coinflip.ones", cf.ones.to_string());
                push("coinflip.p_zero", cf.p_zero.to_string());
                push("coinflip.bias", cf.bias.to_string());
                push("coinflip.std_err", cf.std_err.to_string());
            }
            out
        }
        _ => {
            let mut text =
                serde_json::to_string_pretty(summary).expect("summary serializes");
            text.push('\n');
            text
        }
    }
}

/// Execute a resolved experiment end to end.
pub fn run_experiment(
    resolved: &ResolvedExperiment,
    with_transcripts: bool,
) -> Result<ExperimentOutput, CliError> {
    let (summary, transcripts, eve_detected_runs) = match resolved.protocol {
        Protocol::Coinflip => (coinflip_summary(resolved)?, None, 0),
        _ => {
            let records = comparison_trials(resolved, with_transcripts)?;
            let transcripts = with_transcripts.then(|| {
                let mut out = String::new();
                for (index, record) in records.iter().enumerate() {
                    out.push_str(&format!("{{\"trial\":{index}}}\n"));
                    out.push_str(record.transcript_jsonl.as_deref().unwrap_or(""));
                }
                out
            });
            let (summary, eve) = summarize_comparison(resolved, &records);
            (summary, transcripts, eve)
        }
    };
    Ok(ExperimentOutput {
        summary: render_summary(&summary, &resolved.config.format),
        transcripts,
        eve_detected_runs,
    })
}
