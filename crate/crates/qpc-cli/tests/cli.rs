//! End-to-end checks against the compiled binary: exit codes, output
//! files, and byte-level determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn qpc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qpc-cli-test-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("scratch dir");
    dir
}

#[test]
fn run_succeeds_and_emits_parsable_json() {
    let output = qpc(&[
        "run",
        "--protocol",
        "improved",
        "--n",
        "4",
        "--k",
        "2",
        "--trials",
        "50",
        "--seed",
        "11",
    ]);
    assert!(output.status.success(), "{output:?}");
    let summary: serde_json::Value =
        serde_json::from_slice(&output.stdout).expect("summary is JSON");
    assert_eq!(summary["config"]["protocol"], "improved");
    assert_eq!(summary["trials"], 50);
    assert!(summary["config"]["hash_key"].is_string());
}

#[test]
fn config_errors_exit_2() {
    let output = qpc(&["run", "--protocol", "mystery"]);
    assert_eq!(output.status.code(), Some(2), "{output:?}");
    assert!(!output.stderr.is_empty());

    let output = qpc(&["run", "--protocol", "wcwz", "--n", "4", "--m", "9"]);
    assert_eq!(output.status.code(), Some(2), "{output:?}");
}

#[test]
fn detected_eavesdropping_exits_3() {
    let output = qpc(&[
        "run",
        "--protocol",
        "improved",
        "--n",
        "2",
        "--k",
        "16",
        "--attack",
        "intercept:1",
        "--trials",
        "50",
        "--seed",
        "3",
    ]);
    assert_eq!(output.status.code(), Some(3), "{output:?}");
    let summary: serde_json::Value =
        serde_json::from_slice(&output.stdout).expect("summary is JSON");
    assert!(summary["verdicts"]["eve_detected"].as_u64().unwrap() > 0);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = scratch_dir("determinism");
    let out_a = dir.join("a.json");
    let out_b = dir.join("b.json");
    let tr_a = dir.join("a.jsonl");
    let tr_b = dir.join("b.jsonl");
    for (out, tr) in [(&out_a, &tr_a), (&out_b, &tr_b)] {
        let output = qpc(&[
            "run",
            "--protocol",
            "wcwz-fixed",
            "--n",
            "6",
            "--m",
            "2",
            "--k",
            "3",
            "--trials",
            "100",
            "--seed",
            "21",
            "--out",
            out.to_str().unwrap(),
            "--transcripts",
            tr.to_str().unwrap(),
        ]);
        assert!(output.status.success(), "{output:?}");
    }
    assert_eq!(
        std::fs::read(&out_a).unwrap(),
        std::fs::read(&out_b).unwrap()
    );
    assert_eq!(std::fs::read(&tr_a).unwrap(), std::fs::read(&tr_b).unwrap());
    // Transcript lines are standalone JSON objects.
    let transcripts = std::fs::read_to_string(&tr_a).unwrap();
    for line in transcripts.lines().take(32) {
        let _: serde_json::Value = serde_json::from_str(line).expect("JSONL event");
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn figures_write_csv_and_gnuplot_stub() {
    let dir = scratch_dir("figures");
    let out = dir.join("fig1.csv");
    let output = qpc(&["figures", "--which", "fig1", "--out", out.to_str().unwrap()]);
    assert!(output.status.success(), "{output:?}");
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("m,leakage_bits\n"));
    assert_eq!(csv.lines().count(), 21);
    let stub = std::fs::read_to_string(dir.join("fig1.gnuplot")).unwrap();
    assert!(stub.contains("fig1.csv"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn sweep_emits_closed_form_next_to_estimates() {
    let output = qpc(&[
        "sweep",
        "--kind",
        "escape",
        "--alpha",
        "1",
        "--k",
        "4,8",
        "--trials",
        "5000",
        "--seed",
        "9",
    ]);
    assert!(output.status.success(), "{output:?}");
    let text = String::from_utf8(output.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("alpha,k,closed_form,mc_estimate,std_err"));
    assert_eq!(lines.count(), 2);

    // Empty grid: header only.
    let output = qpc(&["sweep", "--kind", "spoil", "--k", "", "--trials", "5000"]);
    assert!(output.status.success());
    assert_eq!(
        String::from_utf8(output.stdout).unwrap(),
        "k,expected,mc_estimate,std_err\n"
    );
}

#[test]
fn known_bug_demonstration_via_flags() {
    let output = qpc(&[
        "run",
        "--protocol",
        "wcwz",
        "--n",
        "6",
        "--m",
        "2",
        "--k",
        "2",
        "--trials",
        "1",
        "--seed",
        "1",
        "--hash-rounds",
        "0",
        "--a",
        "000011",
        "--b",
        "000010",
    ]);
    assert!(output.status.success(), "{output:?}");
    let summary: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(summary["verdicts"]["equal"], 1);
    assert_eq!(summary["incorrect_equal_verdicts"], 1);
    assert!(summary["note"].as_str().unwrap().contains("single-group"));
}
