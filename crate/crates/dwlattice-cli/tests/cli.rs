use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn dwlattice(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dwlattice"))
        .args(args)
        .current_dir(cwd)
        .env_remove("DWLATTICE_CONFIG_PATH")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn potential_writes_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dwlattice(&["potential", "--out", "p", "--pol-phase", "-0.9"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("p/potential.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x_over_lambda,v_m0_ER,v_mminus1_ER,beff_kHz"));
    assert_eq!(lines.count(), 256);
    assert!(!text.contains('\r'));
}

#[test]
fn default_output_directory_is_per_command() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&dwlattice(&["calibrate"], dir.path())), 0);
    assert!(dir.path().join("dwlattice-out/calibrate/manifest.json").exists());
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = |o: &'static str| ["rabi", "--preset", "ramsey", "--seed", "11", "--shots", "8", "--atoms", "8", "--out", o];
    assert_eq!(code(&dwlattice(&args("a"), dir.path())), 0);
    assert_eq!(code(&dwlattice(&args("b"), dir.path())), 0);
    let a = fs::read(dir.path().join("a/rabi.csv")).unwrap();
    let b = fs::read(dir.path().join("b/rabi.csv")).unwrap();
    assert_eq!(a, b);

    let other = ["rabi", "--preset", "ramsey", "--seed", "12", "--shots", "8", "--atoms", "8", "--out", "c"];
    assert_eq!(code(&dwlattice(&other, dir.path())), 0);
    assert_ne!(a, fs::read(dir.path().join("c/rabi.csv")).unwrap());
}

#[test]
fn manifest_checksums_match_outputs() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&dwlattice(&["ramsey", "--preset", "ramsey", "--seed", "3", "--shots", "10", "--atoms", "10", "--out", "r"], dir.path())), 0);
    let m = json(&dir.path().join("r/manifest.json"));
    assert_eq!(m["command"], "ramsey");
    assert_eq!(m["seed"], 3);
    assert!(m["error"].is_null());
    let outputs = m["outputs"].as_array().unwrap();
    let names: Vec<&str> = outputs.iter().map(|o| o["file"].as_str().unwrap()).collect();
    assert_eq!(names, ["ramsey.csv", "summary.json"]);
    for o in outputs {
        let bytes = fs::read(dir.path().join("r").join(o["file"].as_str().unwrap())).unwrap();
        assert_eq!(o["bytes"].as_u64().unwrap(), bytes.len() as u64);
        let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(o["sha256"].as_str().unwrap(), digest);
    }
}

#[test]
fn stochastic_commands_require_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    for c in ["rabi", "ramsey", "echo"] {
        let out = dwlattice(&[c, "--out", "x"], dir.path());
        assert_eq!(code(&out), 2, "{c}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
        let m = json(&dir.path().join("x/manifest.json"));
        assert_eq!(m["error"]["exit_code"], 2);
    }
}

#[test]
fn usage_and_config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&dwlattice(&["no-such-command"], dir.path())), 2);
    assert_eq!(code(&dwlattice(&[], dir.path())), 2);
    assert_eq!(code(&dwlattice(&["potential", "--preset", "fig9"], dir.path())), 2);

    fs::write(dir.path().join("typo.toml"), "[controls]\nv_half = 80\nv_lamda = 20\n").unwrap();
    let out = dwlattice(&["potential", "--config", "typo.toml", "--out", "t"], dir.path());
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("typo.toml") && err.contains("line 3"), "{err}");

    fs::write(dir.path().join("bad.toml"), "[controls\n").unwrap();
    assert_eq!(code(&dwlattice(&["potential", "--config", "bad.toml", "--out", "t"], dir.path())), 2);
}

#[test]
fn invalid_values_exit_with_one_and_record_the_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dwlattice(&["transport-scan", "--start", "-0.9", "--points", "3", "--out", "s"], dir.path());
    assert_eq!(code(&out), 1);
    let m = json(&dir.path().join("s/manifest.json"));
    assert_eq!(m["error"]["exit_code"], 1);
    assert!(m["error"]["message"].as_str().unwrap().contains("transport_scan.dx"));
    assert!(m["outputs"].as_array().unwrap().is_empty());
    assert!(!dir.path().join("s/transport_scan.csv").exists());
}

#[test]
fn calibrate_hits_requested_splitting() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&dwlattice(&["calibrate", "--splitting=32e3", "--out", "c"], dir.path())), 0);
    let s = json(&dir.path().join("c/summary.json"));
    let split = s["splitting_Hz"].as_f64().unwrap();
    assert!((split - 32e3).abs() < 1e3, "{split}");
    assert!(s["converged"].as_bool().unwrap());

    // Beyond the largest reachable splitting the solver reports failure.
    assert_eq!(code(&dwlattice(&["calibrate", "--splitting=90e3", "--out", "d"], dir.path())), 1);
    assert!(!json(&dir.path().join("d/summary.json"))["converged"].as_bool().unwrap());
}

#[test]
fn print_defaults_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = dwlattice(&["--print-defaults"], dir.path());
    assert_eq!(code(&first), 0);
    fs::write(dir.path().join("defaults.toml"), &first.stdout).unwrap();
    let second = dwlattice(&["--print-defaults", "--config", "defaults.toml"], dir.path());
    assert_eq!(first.stdout, second.stdout);

    let fig2 = dwlattice(&["--print-defaults", "--preset", "fig2"], dir.path());
    assert!(String::from_utf8_lossy(&fig2.stdout).contains("pol_phase = -0.9136"));
}

#[test]
fn config_is_found_on_search_path_and_in_working_directory() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("conf");
    fs::create_dir(&conf).unwrap();
    fs::write(conf.join("dwlattice.toml"), "[controls]\nv_half = 42.0\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_dwlattice"))
        .arg("--print-defaults")
        .current_dir(dir.path())
        .env("DWLATTICE_CONFIG_PATH", &conf)
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains("v_half = 42.0"));

    fs::write(dir.path().join("dwlattice.toml"), "[controls]\nv_half = 43.0\n").unwrap();
    let out = dwlattice(&["--print-defaults"], dir.path());
    assert!(String::from_utf8_lossy(&out.stdout).contains("v_half = 43.0"));
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dwlattice(&["selftest", "--out", "s"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stderr).matches("PASS").count(), 6);
}
