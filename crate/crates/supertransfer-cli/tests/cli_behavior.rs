//! Behavior of the binary around the happy path: configuration errors must
//! exit 1 with a readable message (never a panic), overrides must do what
//! they say, and the artifact files must be internally consistent.

use std::path::{Path, PathBuf};
use std::process::Output;

use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn run(subcommand: &str, scenario_path: &Path, out: &Path, extra: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_supertransfer"))
        .arg(subcommand)
        .args(["--scenario".as_ref(), scenario_path.as_os_str()])
        .args(["--out".as_ref(), out.as_os_str()])
        .args(extra)
        .output()
        .expect("binary should spawn")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn rates(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("rates.json")).unwrap()).unwrap()
}

/// Configuration failures exit 1 with a message and must not look like a
/// crash.
fn assert_clean_failure(out: &Output, context: &str) {
    let err = stderr_of(out);
    assert_eq!(out.status.code(), Some(1), "{context}: expected exit 1, stderr: {err}");
    assert!(!err.trim().is_empty(), "{context}: exit 1 without a message");
    assert!(!err.contains("panicked"), "{context}: crashed instead of erroring: {err}");
}

#[test]
fn unknown_scenario_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("typo.toml");
    std::fs::write(
        &file,
        r#"
schema_version = 1
name = "typo"

[system]
kind = "sites"
donor_energies = [148.0]
acceptor_energies = [0.0]
donor_couplings = -10.0
cross_coupling = 10.0
donor_reorg = [0.0]
acceptor_reorg = [80.0]

[run]
horizon = 1.0
"#,
    )
    .unwrap();
    let out = run("transfer", &file, dir.path(), &[]);
    assert_clean_failure(&out, "typo field");
    assert!(
        stderr_of(&out).contains("unknown field"),
        "message should name the problem: {}",
        stderr_of(&out)
    );
}

#[test]
fn mismatched_reorg_length_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("short_reorg.toml");
    std::fs::write(
        &file,
        r#"
schema_version = 1
name = "short-reorg"

[system]
kind = "sites"
donor_energies = [148.0, 148.0]
acceptor_energies = [0.0]
donor_coupling = -10.0
cross_coupling = 10.0
donor_reorg = [0.0]
acceptor_reorg = [80.0]

[run]
horizon = 1.0
"#,
    )
    .unwrap();
    assert_clean_failure(&run("transfer", &file, dir.path(), &[]), "short reorg vector");
}

#[test]
fn missing_scenario_file_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("transfer", &dir.path().join("nope.toml"), dir.path(), &[]);
    assert_clean_failure(&out, "missing scenario");
}

#[test]
fn sweep_requires_its_section() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("sweep-rule2", &scenario("table1_protected.toml"), dir.path(), &[]);
    assert_clean_failure(&out, "sweep without [sweep]");
    assert!(
        stderr_of(&out).contains("[sweep]"),
        "message should point at the missing table: {}",
        stderr_of(&out)
    );
}

/// `--seed` reaches the disorder draw: different seeds give different rates,
/// the same seed reproduces the file byte for byte.
#[test]
fn seed_override_redraws_disorder() {
    let gamma = |seed: &str| {
        let dir = tempfile::tempdir().unwrap();
        let out = run("transfer", &scenario("table1_full.toml"), dir.path(), &["--seed", seed]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
        let bytes = std::fs::read(dir.path().join("rates.json")).unwrap();
        (rates(dir.path())["fit"]["forward_rate"].as_f64().unwrap(), bytes)
    };
    let (g8, bytes8) = gamma("8");
    let (g9, _) = gamma("9");
    let (g8_again, bytes8_again) = gamma("8");
    assert_ne!(g8, g9, "different seeds must redraw the static disorder");
    assert_eq!(g8, g8_again);
    assert_eq!(bytes8, bytes8_again, "same seed must reproduce rates.json exactly");
}

/// One excitation, closed site ledger: populations are per-site columns plus
/// donor/acceptor totals that always sum to one.
#[test]
fn populations_ledger_is_closed() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("transfer", &scenario("table1_protected.toml"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));

    let text = std::fs::read_to_string(dir.path().join("populations.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "time,D1,D2,A1,donor_total,acceptor_total",
        "column layout is part of the interface"
    );
    let mut previous_time = f64::NEG_INFINITY;
    let mut n_rows = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let (time, d1, d2, a1, donors, acceptors) = (v[0], v[1], v[2], v[3], v[4], v[5]);
        assert!(time > previous_time, "time grid must increase");
        previous_time = time;
        assert!((d1 + d2 - donors).abs() < 1e-10);
        assert!((a1 - acceptors).abs() < 1e-10);
        assert!((donors + acceptors - 1.0).abs() < 1e-8, "excitation leaked at t = {time}");
        n_rows += 1;
    }
    assert_eq!(n_rows, 801, "800 steps plus the initial state");
}

/// Leaving `horizon` at its default picks a physical time scale and still
/// produces a usable rise curve.
#[test]
fn auto_horizon_picks_a_scale() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("auto.toml");
    std::fs::write(
        &file,
        r#"
schema_version = 1
name = "auto-horizon"

[system]
kind = "sites"
donor_energies = [148.0, 148.0]
acceptor_energies = [0.0]
donor_coupling = -10.0
cross_coupling = 10.0
donor_reorg = [10.0, 10.0]
acceptor_reorg = [80.0]

[run]
seed = 7
"#,
    )
    .unwrap();
    let out = run("transfer", &file, dir.path(), &[]);
    assert!(
        matches!(out.status.code(), Some(0) | Some(2)),
        "stderr: {}",
        stderr_of(&out)
    );
    let doc = rates(dir.path());
    let horizon = doc["horizon"].as_f64().unwrap();
    assert!(horizon > 0.0 && horizon.is_finite());
    assert!(!doc["fit"].is_null(), "auto horizon should leave a fittable curve");
}

/// The directly coupled qubit circuit realizes the site model exactly, so
/// both scenario spellings of the protected aggregate must give the same
/// dynamics and rate.
#[test]
fn circuit1_realizes_the_site_model() {
    let site_dir = tempfile::tempdir().unwrap();
    let circuit_dir = tempfile::tempdir().unwrap();
    let site = run("transfer", &scenario("table1_protected.toml"), site_dir.path(), &[]);
    let circuit = run("transfer", &scenario("circuit1_protected.toml"), circuit_dir.path(), &[]);
    assert_eq!(site.status.code(), Some(0), "stderr: {}", stderr_of(&site));
    assert_eq!(circuit.status.code(), Some(0), "stderr: {}", stderr_of(&circuit));

    let gs = rates(site_dir.path())["fit"]["forward_rate"].as_f64().unwrap();
    let gc = rates(circuit_dir.path())["fit"]["forward_rate"].as_f64().unwrap();
    assert!((gs - gc).abs() < 1e-9, "site {gs} vs circuit {gc}");

    let pops_site = std::fs::read_to_string(site_dir.path().join("populations.csv")).unwrap();
    let pops_circuit =
        std::fs::read_to_string(circuit_dir.path().join("populations.csv")).unwrap();
    assert_eq!(pops_site, pops_circuit, "identical models must print identical curves");
}
