//! Behavior tests for the binary: exit codes, diagnostics, seed
//! precedence, and output formats.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_histmerge"));
    cmd.env_remove("HISTMERGE_SEED");
    cmd
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "bad JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

#[test]
fn usage_errors_exit_two() {
    let out = bin().arg("--definitely-not-a-flag").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["simulate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "missing required flags");
}

#[test]
fn missing_files_exit_one_with_the_path() {
    let out = bin()
        .args(["family", "--spec", "/nope/missing.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("missing.json"), "{err}");
}

#[test]
fn schema_errors_name_the_offending_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");

    std::fs::write(&cfg, r#"{"steps": "many"}"#).unwrap();
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .args(["--out", "x.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("steps"), "{err}");

    std::fs::write(&cfg, r#"{"record_capcity": 2}"#).unwrap();
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .args(["--out", "x.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("record_capcity"), "{err}");

    // Shape errors inside nested matrices carry the full path.
    let spec = dir.path().join("family.json");
    std::fs::write(
        &spec,
        r#"{
          "initial_state": {"dim": 2, "re": [[1, 0], [0, 0]]},
          "hamiltonian": {"dim": 2, "re": [[0, 0]]},
          "slots": []
        }"#,
    )
    .unwrap();
    let out = bin().args(["family", "--spec"]).arg(&spec).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("hamiltonian.re"), "{err}");
}

#[test]
fn invalid_config_values_exit_one_with_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"dim": 1}"#).unwrap();
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .args(["--out", "x.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("dim"), "{err}");
}

#[test]
fn seed_precedence_is_flag_env_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"dim": 3, "steps": 2, "seed": 5}"#).unwrap();
    let csv = dir.path().join("out.csv");

    let seed_of = |cmd: &mut Command| {
        let out = cmd.output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{:?}", out);
        stdout_json(&out)["config"]["seed"].as_u64().unwrap()
    };

    let mut file_only = bin();
    file_only
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&csv);
    assert_eq!(seed_of(&mut file_only), 5);

    let mut env_beats_file = bin();
    env_beats_file
        .env("HISTMERGE_SEED", "7")
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&csv);
    assert_eq!(seed_of(&mut env_beats_file), 7);

    let mut flag_beats_env = bin();
    flag_beats_env
        .env("HISTMERGE_SEED", "7")
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&csv)
        .args(["--seed", "9"]);
    assert_eq!(seed_of(&mut flag_beats_env), 9);

    let mut garbage_env = bin();
    garbage_env
        .env("HISTMERGE_SEED", "not-a-number")
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&csv);
    let out = garbage_env.output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("HISTMERGE_SEED"));
}

#[test]
fn worker_count_cannot_change_the_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"dim": 4, "steps": 4, "seed": 3}"#).unwrap();

    let run = |jobs: &str, out_name: &str| {
        let out = bin()
            .current_dir(dir.path())
            .args(["simulate", "--config", "cfg.json", "--out", out_name])
            .args(["--trials", "4", "--jobs", jobs])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        (0..4)
            .map(|i| {
                let name = out_name.replace(".csv", &format!(".{i}.csv"));
                std::fs::read(dir.path().join(name)).unwrap()
            })
            .collect::<Vec<_>>()
    };
    // Same --out both times so the echoed paths match; only --jobs
    // differs, which must not reach any output byte.
    let serial = run("1", "run.csv");
    let parallel = run("4", "run.csv");
    assert_eq!(serial, parallel);
}

#[test]
fn trials_split_into_indexed_files_and_differ() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"dim": 4, "steps": 3, "seed": 11}"#).unwrap();
    let out = bin()
        .current_dir(dir.path())
        .args([
            "simulate",
            "--config",
            "cfg.json",
            "--out",
            "t.csv",
            "--trials",
            "3",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let summary = stdout_json(&out);
    assert_eq!(
        summary["outputs"],
        serde_json::json!(["t.0.csv", "t.1.csv", "t.2.csv"])
    );
    assert!(!dir.path().join("t.csv").exists());
    let t0 = std::fs::read(dir.path().join("t.0.csv")).unwrap();
    let t1 = std::fs::read(dir.path().join("t.1.csv")).unwrap();
    assert_ne!(t0, t1, "different trial seeds must give different rows");
    let seeds: Vec<u64> = summary["per_trial"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["seed"].as_u64().unwrap())
        .collect();
    assert_eq!(seeds, vec![11, 12, 13]);
}

#[test]
fn snapshots_only_exist_in_sampled_mode() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");

    std::fs::write(&cfg, r#"{"dim": 3, "steps": 3, "seed": 2}"#).unwrap();
    let out = bin()
        .current_dir(dir.path())
        .args([
            "simulate",
            "--config",
            "cfg.json",
            "--out",
            "s.csv",
            "--snapshots",
            "snaps.json",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let snaps: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("snaps.json")).unwrap()).unwrap();
    let snap = &snaps.as_array().unwrap()[0];
    assert_eq!(snap["rho_bar"]["dim"], serde_json::json!(3));
    assert_eq!(snap["rho_bar"]["re"].as_array().unwrap().len(), 3);
    assert!(snap["entropy"].as_f64().unwrap() >= -1e-12);
    let weights: f64 = snap["weights"]
        .as_array()
        .unwrap()
        .iter()
        .map(|w| w.as_f64().unwrap())
        .sum();
    assert!((weights - 1.0).abs() < 1e-9, "weights sum to {weights}");

    std::fs::write(
        &cfg,
        r#"{"dim": 3, "steps": 3, "seed": 2, "mode": "exhaustive"}"#,
    )
    .unwrap();
    let out = bin()
        .current_dir(dir.path())
        .args([
            "simulate",
            "--config",
            "cfg.json",
            "--out",
            "s.csv",
            "--snapshots",
            "snaps.json",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("snapshots"));
}

#[test]
fn fixture_probabilities_match_the_diagonal_weights() {
    let out = bin()
        .args(["family", "--spec"])
        .arg(fixture("consistent_family.json"))
        .args(["--action", "probabilities"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let table = stdout_json(&out);
    let chains = table["chains"].as_array().unwrap();
    assert_eq!(chains.len(), 4);
    let expect = [("0,0", 0.4), ("0,1", 0.3), ("1,0", 0.2), ("1,1", 0.1)];
    for (chain, (sel, p)) in chains.iter().zip(expect) {
        assert_eq!(chain["selector"], serde_json::json!(sel));
        assert!((chain["probability"].as_f64().unwrap() - p).abs() < 1e-12);
    }
    assert!((table["total"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn decoherence_action_emits_the_full_matrix() {
    let out = bin()
        .args(["family", "--spec"])
        .arg(fixture("double_slit.json"))
        .args(["--action", "decoherence"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let d = stdout_json(&out);
    assert_eq!(d["selectors"].as_array().unwrap().len(), 4);
    let re = d["re"].as_array().unwrap();
    // Same-screen-outcome histories interfere with strength 1/4.
    assert!((re[0].as_array().unwrap()[2].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert!((re[1].as_array().unwrap()[3].as_f64().unwrap() + 0.25).abs() < 1e-12);
    for row in d["im"].as_array().unwrap() {
        for v in row.as_array().unwrap() {
            assert!(v.as_f64().unwrap().abs() < 1e-12);
        }
    }
}

#[test]
fn weak_mode_is_laxer_than_medium() {
    let dir = tempfile::tempdir().unwrap();
    // Imaginary-only coherence: |0><1| * i contributes to medium but
    // not weak consistency. Build it from a y-eigenstate start.
    let spec = dir.path().join("y.json");
    std::fs::write(
        &spec,
        r#"{
          "initial_state": {
            "dim": 2,
            "re": [[0.5, 0.0], [0.0, 0.5]],
            "im": [[0.0, -0.5], [0.5, 0.0]]
          },
          "hamiltonian": {"dim": 2, "re": [[0, 0], [0, 0]]},
          "slots": [
            {
              "time": 1.0,
              "projectors": [
                {"dim": 2, "re": [[1, 0], [0, 0]]},
                {"dim": 2, "re": [[0, 0], [0, 1]]}
              ]
            },
            {
              "time": 2.0,
              "projectors": [
                {"dim": 2, "re": [[0.5, 0.5], [0.5, 0.5]]},
                {"dim": 2, "re": [[0.5, -0.5], [-0.5, 0.5]]}
              ]
            }
          ]
        }"#,
    )
    .unwrap();
    let weak = bin()
        .args(["family", "--spec"])
        .arg(&spec)
        .args(["--mode", "weak"])
        .output()
        .unwrap();
    assert_eq!(weak.status.code(), Some(0), "weak sees no real part");
    let medium = bin()
        .args(["family", "--spec"])
        .arg(&spec)
        .args(["--mode", "medium"])
        .output()
        .unwrap();
    assert_eq!(medium.status.code(), Some(3), "medium sees the magnitude");
    let verdict = stdout_json(&medium);
    assert!((verdict["worst"]["residual"].as_f64().unwrap() - 0.25).abs() < 1e-10);
}

#[test]
fn verify_reports_are_complete_and_violations_exit_three() {
    let out = bin()
        .args([
            "verify",
            "--suite",
            "gl",
            "--instances",
            "10",
            "--dims",
            "2,3",
            "--seed",
            "1",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    for key in ["checks", "instances", "violations", "worst_slack", "suites"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert_eq!(report["instances"], serde_json::json!(20));
    assert_eq!(report["violations"], serde_json::json!(0));
    assert_eq!(report["config"]["seed"], serde_json::json!(1));

    // Tolerance zero turns ordinary negative roundoff into violations:
    // rank-1 states make the inequality an equality, and the slack
    // lands a few 1e-16 on either side of zero. This frozen ensemble
    // has three such checks, so the exit must be 3 with digests.
    let out = bin()
        .args([
            "verify",
            "--suite",
            "gl",
            "--instances",
            "30",
            "--dims",
            "2",
            "--seed",
            "1",
            "--tolerance",
            "0",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let report = stdout_json(&out);
    assert!(report["violations"].as_u64().unwrap() > 0);
    let failure = &report["suites"][0]["failures"][0];
    for key in ["seed", "instance", "dim", "note", "slack", "detail"] {
        assert!(failure.get(key).is_some(), "failure digest missing {key}");
    }
    assert!(failure["slack"].as_f64().unwrap() < 0.0);
}

#[test]
fn verify_out_flag_writes_the_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = bin()
        .args([
            "verify",
            "--suite",
            "quadratic",
            "--instances",
            "5",
            "--dims",
            "2",
        ])
        .arg("--out")
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty(), "report went to the file");
    let report: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(report["suites"][0]["name"], serde_json::json!("quadratic"));
}

#[test]
fn csv_header_is_pinned() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"dim": 3, "steps": 2}"#).unwrap();
    let csv = dir.path().join("run.csv");
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&csv)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(
        text.starts_with("step,time,event,entropy,probability,bundle_size,ledger_occupancy\n"),
        "{text}"
    );
    for line in text.lines().skip(1) {
        assert_eq!(line.split(',').count(), 7, "{line}");
    }
}
