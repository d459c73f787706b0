use assert_cmd::Command;
use predicates::prelude::*;

fn fixture() -> &'static str {
    concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/h2_sto3g.fcidump")
}

fn dmps() -> Command {
    Command::cargo_bin("dmps").unwrap()
}

#[test]
fn ham_build_writes_pauli_file() {
    let dir = tempfile::tempdir().unwrap();
    dmps()
        .args(["ham", "build", "--fcidump", fixture(), "--out"])
        .arg(dir.path())
        .assert()
        .success()
        .stdout(predicate::str::contains("strings = 15"));
    let text = std::fs::read_to_string(dir.path().join("hamiltonian.pauli")).unwrap();
    assert!(text.starts_with("qubits 4"));

    // rebuilding is byte-identical
    dmps()
        .args(["ham", "build", "--fcidump", fixture(), "--out"])
        .arg(dir.path())
        .assert()
        .success();
    let again = std::fs::read_to_string(dir.path().join("hamiltonian.pauli")).unwrap();
    assert_eq!(text, again);
}

#[test]
fn missing_file_exits_2_with_json_error() {
    dmps()
        .args(["ham", "build", "--fcidump", "/nonexistent.fcidump", "--out", "/tmp"])
        .assert()
        .code(2)
        .stderr(predicate::str::contains("\"code\":2"));
}

#[test]
fn malformed_fcidump_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.fcidump");
    std::fs::write(&bad, "&FCI NORB=2,NELEC=2,MS2=0,\n&END\n junk 1 1 0 0\n").unwrap();
    dmps()
        .args(["ham", "build", "--fcidump"])
        .arg(&bad)
        .args(["--out"])
        .arg(dir.path())
        .assert()
        .code(2)
        .stderr(predicate::str::contains("line 3"));
}

#[test]
fn vqe_run_reaches_chemical_accuracy_and_is_worker_invariant() {
    let dir1 = tempfile::tempdir().unwrap();
    let dir4 = tempfile::tempdir().unwrap();
    for (dir, workers) in [(&dir1, "1"), (&dir4, "4")] {
        dmps()
            .args([
                "vqe", "run", "--fcidump", fixture(), "--optimizer", "bfgs",
                "--max-iter", "50", "--workers", workers, "--seed", "7", "--out",
            ])
            .arg(dir.path())
            .assert()
            .success();
    }
    let rec: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir1.path().join("run.json")).unwrap()).unwrap();
    let err = rec["error_vs_reference"].as_f64().unwrap().abs();
    assert!(err <= 1.6e-3, "error vs FCI {err}");
    assert!(rec["config_hash"].as_str().unwrap().len() == 16);

    let t1 = std::fs::read_to_string(dir1.path().join("trajectory.csv")).unwrap();
    let t4 = std::fs::read_to_string(dir4.path().join("trajectory.csv")).unwrap();
    // identical apart from wall-clock columns
    let strip = |s: &str| {
        s.lines()
            .map(|l| l.rsplit_once(',').map(|(head, _)| head.to_string()).unwrap_or_else(|| l.to_string()))
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&t1), strip(&t4));
}

#[test]
fn pauli_source_requires_circuit_ansatz() {
    let dir = tempfile::tempdir().unwrap();
    dmps()
        .args(["ham", "build", "--fcidump", fixture(), "--out"])
        .arg(dir.path())
        .assert()
        .success();
    let pauli = dir.path().join("hamiltonian.pauli");
    dmps()
        .args(["vqe", "run", "--pauli"])
        .arg(&pauli)
        .args(["--out"])
        .arg(dir.path())
        .assert()
        .code(2)
        .stderr(predicate::str::contains("uccsd needs electron counts"));
}

#[test]
fn grad_check_reports_small_errors_on_h2() {
    let dir = tempfile::tempdir().unwrap();
    dmps()
        .args([
            "grad", "check", "--fcidump", fixture(), "--bond-dim", "4",
            "--svd-tol", "0", "--seed", "3", "--out",
        ])
        .arg(dir.path())
        .assert()
        .success();
    let rep: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("grad_check.json")).unwrap())
            .unwrap();
    assert!(rep["mre_bp_vs_fd"].as_f64().unwrap() < 1e-6);
    assert!(rep["max_abs_bp_vs_psr"].as_f64().unwrap() < 1e-9);
}

#[test]
fn bench_emits_table() {
    let dir = tempfile::tempdir().unwrap();
    dmps()
        .args(["bench", "--fcidump", fixture(), "--bond-dim", "4", "--out"])
        .arg(dir.path())
        .assert()
        .success()
        .stdout(predicate::str::contains("m,t_bp_s"));
    assert!(dir.path().join("bench.csv").exists());
    assert!(dir.path().join("bench.json").exists());
}

#[test]
fn env_vars_override_flags() {
    let dir = tempfile::tempdir().unwrap();
    dmps()
        .env("DMPS_FCIDUMP", fixture())
        .env("DMPS_OUT", dir.path())
        .args(["ham", "build"])
        .assert()
        .success();
    assert!(dir.path().join("hamiltonian.pauli").exists());
}

#[test]
fn conflicting_sources_rejected() {
    dmps()
        .args([
            "vqe", "run", "--fcidump", fixture(), "--pauli", fixture(), "--out", "/tmp",
        ])
        .assert()
        .code(2)
        .stderr(predicate::str::contains("mutually exclusive"));
}
