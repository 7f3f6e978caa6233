//! `qpc` — run comparison-protocol experiments, emit figure tables, and
//! sweep attack parameters.
//!
//! Exit codes: 0 success, 2 configuration error, 3 at least one run
//! ended in eavesdropper detection (so CI can assert on it), 1 I/O or
//! other failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qpc_cli::config::{ConfigOverrides, ExperimentConfig};
use qpc_cli::experiment::run_experiment;
use qpc_cli::figures;
use qpc_cli::sweep;
use qpc_core::adversary::ForwardRoute;

#[derive(Parser)]
#[command(
    name = "qpc",
    about = "Simulator and analysis toolkit for two-party private comparison protocols",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute protocol trials and write an outcome summary.
    Run(Box<RunArgs>),
    /// Emit a leakage figure table as CSV plus a gnuplot stub.
    Figures(FiguresArgs),
    /// Sweep attack parameters, closed form next to Monte Carlo.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// wcwz | wcwz-fixed | improved | coinflip
    #[arg(long)]
    protocol: Option<String>,
    /// Hash length in bits.
    #[arg(long)]
    n: Option<usize>,
    /// Group size (wcwz variants only).
    #[arg(long)]
    m: Option<usize>,
    /// Decoys per insertion / per direction.
    #[arg(long)]
    k: Option<usize>,
    /// Interception probability for the intercept attack.
    #[arg(long)]
    alpha: Option<f64>,
    /// none | intercept[:p] | guessbasis[:z|x] | xflip:<count> | internal:<party>:<policy>
    #[arg(long)]
    attack: Option<String>,
    /// simultaneous | ordered:alice | ordered:bob
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Shared permutation key as 32 hex characters.
    #[arg(long)]
    hash_key: Option<String>,
    /// Permutation rounds; 0 is the identity (test vectors).
    #[arg(long)]
    hash_rounds: Option<u32>,
    /// Tolerated decoy conflict rate.
    #[arg(long)]
    threshold: Option<f64>,
    /// Portion of return decoys checked.
    #[arg(long)]
    check_fraction: Option<f64>,
    /// Fixed input for the first party (bit string); random when absent.
    #[arg(long)]
    a: Option<String>,
    /// Fixed input for the second party (bit string).
    #[arg(long)]
    b: Option<String>,
    /// Coin-flipping strategy: honest | adaptive:<0|1>
    #[arg(long)]
    alice: Option<String>,
    /// Coin-flipping strategy: honest | adaptive:<0|1>
    #[arg(long)]
    bob: Option<String>,
    /// json | csv
    #[arg(long)]
    format: Option<String>,
    /// Summary destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write full per-trial transcripts (JSON lines) here.
    #[arg(long)]
    transcripts: Option<PathBuf>,
}

#[derive(Args)]
struct FiguresArgs {
    /// fig1 | fig2
    #[arg(long)]
    which: String,
    /// CSV destination; defaults to <which>.csv. A sibling .gnuplot
    /// stub is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// escape | spoil
    #[arg(long)]
    kind: String,
    /// Comma-separated interception probabilities (escape sweeps).
    #[arg(long, default_value = "0.25,0.5,1")]
    alpha: String,
    /// Comma-separated decoy counts.
    #[arg(long, default_value = "4,8,16")]
    k: String,
    /// Forward route for escape sweeps: improved | wcwz
    #[arg(long, default_value = "improved")]
    route: String,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_or_print(path: Option<&Path>, contents: &str) -> std::io::Result<()> {
    match path {
        Some(path) => std::fs::write(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn run(args: &RunArgs) -> Result<ExitCode, String> {
    let overrides = ConfigOverrides {
        protocol: args.protocol.clone(),
        n: args.n,
        m: args.m,
        k: args.k,
        alpha: args.alpha,
        attack: args.attack.clone(),
        schedule: args.schedule.clone(),
        trials: args.trials,
        seed: args.seed,
        hash_key: args.hash_key.clone(),
        hash_rounds: args.hash_rounds,
        threshold: args.threshold,
        check_fraction: args.check_fraction,
        a: args.a.clone(),
        b: args.b.clone(),
        alice: args.alice.clone(),
        bob: args.bob.clone(),
        format: args.format.clone(),
    };
    let config = ExperimentConfig::resolve(args.config.as_deref(), &overrides)
        .map_err(|e| e.to_string())?;
    let resolved = config.validate().map_err(|e| e.to_string())?;
    let output =
        run_experiment(&resolved, args.transcripts.is_some()).map_err(|e| e.to_string())?;
    write_or_print(args.out.as_deref(), &output.summary)
        .map_err(|e| format!("cannot write summary: {e}"))?;
    if let (Some(path), Some(transcripts)) = (&args.transcripts, &output.transcripts) {
        std::fs::write(path, transcripts).map_err(|e| format!("cannot write transcripts: {e}"))?;
    }
    if output.eve_detected_runs > 0 {
        eprintln!(
            "{} run(s) aborted on eavesdropper detection",
            output.eve_detected_runs
        );
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn emit_figures(args: &FiguresArgs) -> Result<(), String> {
    let (csv, default_name) = match args.which.as_str() {
        "fig1" => (figures::fig1_csv(), "fig1.csv"),
        "fig2" => {
            eprintln!(
                "note: reference curves for the predecessor protocol are not emitted; \
                 only its n = 6 anchor values are documented"
            );
            (figures::fig2_csv(), "fig2.csv")
        }
        other => return Err(format!("unknown figure {other:?}; expected fig1 or fig2")),
    };
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(default_name));
    std::fs::write(&out, &csv).map_err(|e| format!("cannot write {}: {e}", out.display()))?;
    let csv_name = out
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_else(|| default_name.to_string());
    let stub = match args.which.as_str() {
        "fig1" => figures::fig1_gnuplot(&csv_name),
        _ => figures::fig2_gnuplot(&csv_name),
    };
    let stub_path = out.with_extension("gnuplot");
    std::fs::write(&stub_path, stub)
        .map_err(|e| format!("cannot write {}: {e}", stub_path.display()))?;
    eprintln!("wrote {} and {}", out.display(), stub_path.display());
    Ok(())
}

fn run_sweep(args: &SweepArgs) -> Result<(), String> {
    let csv = match args.kind.as_str() {
        "escape" => {
            let alphas = sweep::parse_list::<f64>(&args.alpha)?;
            let ks = sweep::parse_list::<u32>(&args.k)?;
            let route = match args.route.as_str() {
                "improved" => ForwardRoute::Improved,
                "wcwz" => ForwardRoute::Wcwz,
                other => return Err(format!("unknown route {other:?}")),
            };
            sweep::escape_sweep_csv(route, &alphas, &ks, args.trials, args.seed)
        }
        "spoil" => {
            let ks = sweep::parse_list::<u32>(&args.k)?;
            sweep::spoiling_sweep_csv(&ks, args.trials, args.seed)
        }
        other => return Err(format!("unknown sweep {other:?}; expected escape or spoil")),
    };
    write_or_print(args.out.as_deref(), &csv).map_err(|e| format!("cannot write sweep: {e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => match run(args) {
            Ok(code) => return code,
            Err(message) => Err(message),
        },
        Command::Figures(args) => emit_figures(args),
        Command::Sweep(args) => run_sweep(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
