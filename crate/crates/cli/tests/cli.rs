//! Behavior of the command-line surface: exit codes, output shapes, and
//! determinism.

use std::path::Path;
use std::process::{Command, Output};

fn ndsense(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ndsense"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

const EXTREMUM_PMF: &str =
    r#"[{"pattern":[0],"p":0.239583},{"pattern":[1],"p":0.5},{"pattern":[2],"p":0.260417}]"#;

#[test]
fn bound_reports_cross_check() {
    let out = ndsense(&[
        "bound",
        "--scene",
        "phase01pi",
        "--eta",
        "0.6",
        "--pmf",
        EXTREMUM_PMF,
    ]);
    assert!(out.status.success(), "{out:?}");
    let text = stdout(&out);
    assert!(text.contains("2.5658"), "bound value missing:\n{text}");
    assert!(text.contains("cross-check OK"));
    // per-leak table carries one row per leak pattern
    assert!(text.contains("l,lambda,pi_1,pi_2,overlap_abs"));
}

#[test]
fn bound_on_lossless_scene_has_single_leak_row() {
    let out = ndsense(&[
        "bound",
        "--scene",
        "phase01pi",
        "--eta",
        "1.0",
        "--pmf",
        r#"[{"pattern":[0],"p":0.5},{"pattern":[1],"p":0.5}]"#,
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let rows: Vec<&str> = text
        .lines()
        .skip_while(|l| !l.starts_with("l,"))
        .skip(1)
        .take_while(|l| !l.starts_with('#'))
        .collect();
    assert_eq!(rows.len(), 2); // leaks 0 and 1 enumerated ...
    assert!(rows[0].starts_with("0,1.00000000000e0")); // ... but all weight on l = 0
    assert!(rows[1].starts_with("1,0,"));
}

#[test]
fn bound_of_vacuum_is_half() {
    let out = ndsense(&[
        "bound",
        "--scene",
        "phase01pi",
        "--pmf",
        r#"[{"pattern":[0],"p":1.0}]"#,
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("nds_bound_binary      = 5.00000000000e-1"));
}

#[test]
fn bound_usage_errors_exit_2() {
    // unreadable pmf file
    let out = ndsense(&["bound", "--scene", "phase01pi", "--pmf", "/no/such/file.json"]);
    assert_eq!(out.status.code(), Some(2));
    // invalid pmf mass
    let out = ndsense(&[
        "bound",
        "--scene",
        "phase01pi",
        "--pmf",
        r#"[{"pattern":[0],"p":0.9}]"#,
    ]);
    assert_eq!(out.status.code(), Some(2));
    // missing scene file
    let out = ndsense(&["bound", "--scene", "/no/such/scene.json", "--pmf", EXTREMUM_PMF]);
    assert_eq!(out.status.code(), Some(2));
    // unknown flags are a clap usage error
    let out = ndsense(&["bound", "--scene", "phase01pi", "--pmf", EXTREMUM_PMF, "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bound_works_on_the_sample_interferometer_scene() {
    let scene = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenes/interferometer.json")
        .canonicalize()
        .expect("sample scene ships with the repo");
    let out = ndsense(&[
        "bound",
        "--scene",
        scene.to_str().unwrap(),
        "--pmf",
        r#"[{"pattern":[0,0],"p":0.5},{"pattern":[1,0],"p":0.25},{"pattern":[0,1],"p":0.25}]"#,
    ]);
    assert!(out.status.success(), "{out:?}");
    assert!(stdout(&out).contains("cross-check OK"));
}

#[test]
fn bound_writes_csv_and_json_tables() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("subs.csv");
    let out = ndsense(&[
        "bound",
        "--scene",
        "reading",
        "--eta",
        "0.9",
        "--eta2",
        "0.2",
        "--pmf",
        r#"[{"pattern":[0],"p":0.5},{"pattern":[1],"p":0.5}]"#,
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("l,lambda,pi_1,pi_2,g_1_1_re"));
    assert_eq!(csv.lines().count(), 3);

    let json_path = dir.path().join("subs.json");
    let out = ndsense(&[
        "bound",
        "--scene",
        "reading",
        "--pmf",
        r#"[{"pattern":[0],"p":0.5},{"pattern":[1],"p":0.5}]"#,
        "--format",
        "json",
        "--out",
        json_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert!(value["bound"].is_f64());
    assert_eq!(value["sub_ensembles"].as_array().unwrap().len(), 2);
}

#[test]
fn sweep_row_counts_and_eta_zero_plateau() {
    let out = ndsense(&["sweep-triangle", "--eta", "0.6", "--grid-step", "0.5"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 7); // header + C(4,2) lattice points

    let out = ndsense(&["sweep-triangle", "--eta", "0", "--grid-step", "0.25"]);
    assert!(out.status.success());
    for line in stdout(&out).lines().skip(1) {
        let pe_nds = line.split(',').nth(2).unwrap();
        assert_eq!(pe_nds, "5.00000000000e-1");
    }

    // a step that does not divide 1 is a usage error
    let out = ndsense(&["sweep-triangle", "--grid-step", "0.3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_passes_and_fails_by_tolerance() {
    let out = ndsense(&["verify", "--trials", "8", "--seed", "5"]);
    assert!(out.status.success(), "{out:?}");
    let text = stdout(&out);
    assert_eq!(text.matches("pass").count(), 7);

    // vacuous run
    let out = ndsense(&["verify", "--trials", "0"]);
    assert!(out.status.success());

    // adversarial tolerance: failures with a replayable counterexample
    let out = ndsense(&["verify", "--trials", "8", "--seed", "5", "--tol", "1e-18"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("first counterexample"), "{err}");
    assert!(err.contains("replay"), "{err}");
}

#[test]
fn optimize_writes_results_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("results.json");
    let out = ndsense(&[
        "optimize",
        "--scene",
        "phase01pi",
        "--eta",
        "0.6",
        "--peak",
        "2",
        "--grid-step",
        "0.05",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let cost = value["best"]["cost"].as_f64().unwrap();
    assert!((cost - 0.0256584).abs() < 1e-6, "cost {cost}");
    assert!(value["evaluations"].as_u64().unwrap() > 0);
    assert!(value["ties"].is_array());
    assert!(value["wall_time_ms"].is_u64());
    assert_eq!(value["constraint"]["peak_at_most"], 2);
}

#[test]
fn optimize_vacuum_and_unbounded_cases() {
    let out = ndsense(&[
        "optimize",
        "--scene",
        "phase01pi",
        "--peak",
        "0",
        "--grid-step",
        "0.5",
    ]);
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(value["best"]["cost"].as_f64().unwrap(), 0.5);

    // a bare mean constraint cannot bound the support
    let out = ndsense(&[
        "optimize",
        "--scene",
        "phase01pi",
        "--mean-energy",
        "1.0",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn identical_invocations_are_byte_identical() {
    let a = ndsense(&["sweep-triangle", "--eta", "0.37", "--grid-step", "0.1"]);
    let b = ndsense(&["sweep-triangle", "--eta", "0.37", "--grid-step", "0.1"]);
    assert_eq!(a.stdout, b.stdout);

    let a = ndsense(&["bound", "--scene", "phase01pi", "--pmf", EXTREMUM_PMF]);
    let b = ndsense(&["bound", "--scene", "phase01pi", "--pmf", EXTREMUM_PMF]);
    assert_eq!(a.stdout, b.stdout);
}
