//! End-to-end checks of the experiment runner binary: exit codes, output
//! determinism, config handling.

use std::path::Path;
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_sobolab")
}

fn run(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(bin())
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

#[test]
fn trace_norm_run_passes_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["trace-norm", "--s", "0.75", "--n", "2", "--N", "64", "--probes", "5"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("trace_norm.csv").exists());
    assert!(dir.path().join("trace_norm_config.toml").exists());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("[pass]"), "{}", stdout);
}

#[test]
fn identical_runs_are_byte_identical() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    for d in [&d1, &d2] {
        let out = run(
            &["trace-norm", "--s", "0.8", "--n", "2", "--N", "64", "--probes", "3", "--seed", "9"],
            d.path(),
        );
        assert!(out.status.success());
    }
    let a = std::fs::read(d1.path().join("trace_norm.csv")).unwrap();
    let b = std::fs::read(d2.path().join("trace_norm.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn unknown_suite_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["suite", "everything"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["does-not-exist"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_config_key_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    let out = run(
        &["appendix", "--config", cfg.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_drives_run_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("appendix.toml");
    std::fs::write(&cfg, "radius = 1.0\nn_theta = 24\nn_phi = 4\n").unwrap();
    let out = run(&["appendix", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let resolved = std::fs::read_to_string(dir.path().join("appendix_config.toml")).unwrap();
    assert!(resolved.contains("n_theta = 24"));
    // flag overrides the configured radius; the resolved config records it
    let out = run(
        &["appendix", "--config", cfg.to_str().unwrap(), "--R", "0.5"],
        dir.path(),
    );
    assert!(out.status.success());
    let resolved = std::fs::read_to_string(dir.path().join("appendix_config.toml")).unwrap();
    assert!(resolved.contains("radius = 0.5"));
}

#[test]
fn quick_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["suite", "quick"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8_lossy(&out.stdout);
    for id in sobolab::acceptance::quick_ids() {
        assert!(
            stdout.contains(&format!("criterion {id:2}")),
            "criterion {id} missing from:\n{stdout}"
        );
    }
    assert!(dir.path().join("suite_quick.json").exists());
}

#[test]
fn env_var_sets_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(bin())
        .args(["appendix", "--R", "1.0"])
        .env("SOBOLAB_OUT", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("appendix.json").exists());
}
