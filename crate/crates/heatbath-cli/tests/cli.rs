//! End-to-end checks of the `heatbath` binary: exit codes, artifact
//! determinism, config parsing in both formats, and manifest round-trips.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use heatbath_cli::manifest::Manifest;

const BIN: &str = env!("CARGO_BIN_EXE_heatbath");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn read(path: &Path) -> Vec<u8> {
    fs::read(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn happy_path_writes_passing_manifest_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let output = run(&[
        "collide",
        "--samples",
        "200",
        "--seed",
        "7",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );

    let manifest: Manifest =
        serde_json::from_slice(&read(&out.join("collide_manifest.json"))).unwrap();
    assert!(manifest.all_pass);
    assert_eq!(manifest.experiment, "collide");
    assert_eq!(manifest.seed, 7);
    assert!(!manifest.checks.is_empty());
    assert!(manifest
        .artifacts
        .iter()
        .any(|a| a.ends_with("collide_events.csv")));

    let csv = String::from_utf8(read(&out.join("collide_events.csv"))).unwrap();
    assert!(csv.ends_with('\n') && !csv.contains('\r'));
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.contains("momentum_residual"), "header: {header}");
    // Every data cell past the index parses as a '.'-decimal float.
    for line in lines.clone() {
        for cell in line.split(',').skip(1) {
            assert!(cell.parse::<f64>().is_ok(), "bad cell {cell:?} in {line:?}");
            assert!(!cell.contains(';'), "unexpected separator in {cell:?}");
        }
    }
    assert_eq!(lines.count(), 200);
}

#[test]
fn same_seed_reproduces_artifacts_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let output = run(&[
            "collide",
            "--samples",
            "120",
            "--seed",
            "99",
            "--out-dir",
            out.to_str().unwrap(),
        ]);
        assert!(output.status.success());
    }
    assert_eq!(
        read(&a.join("collide_events.csv")),
        read(&b.join("collide_events.csv"))
    );

    // Manifests differ only in the echoed output directory.
    let mut ma: Manifest = serde_json::from_slice(&read(&a.join("collide_manifest.json"))).unwrap();
    let mut mb: Manifest = serde_json::from_slice(&read(&b.join("collide_manifest.json"))).unwrap();
    ma.config.run.out_dir = None;
    mb.config.run.out_dir = None;
    ma.artifacts.clear();
    mb.artifacts.clear();
    assert_eq!(ma, mb);
}

#[test]
fn toml_and_json_configs_produce_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let toml_path = dir.path().join("exp.toml");
    let json_path = dir.path().join("exp.json");
    fs::write(
        &toml_path,
        "experiment = \"collide\"\n\n[params]\ngamma = 0.4\nsigma = 1.5\n\n[run]\nsamples = 150\nseed = 11\n",
    )
    .unwrap();
    fs::write(
        &json_path,
        r#"{"experiment":"collide","params":{"gamma":0.4,"sigma":1.5},"run":{"samples":150,"seed":11}}"#,
    )
    .unwrap();

    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (cfg, out) in [(&toml_path, &a), (&json_path, &b)] {
        let output = run(&[
            "collide",
            "--config",
            cfg.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
        ]);
        assert!(
            output.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&output.stderr)
        );
    }
    assert_eq!(
        read(&a.join("collide_events.csv")),
        read(&b.join("collide_events.csv"))
    );
}

#[test]
fn flag_overrides_beat_config_file_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(&cfg, "experiment = \"collide\"\n\n[run]\nsamples = 60\nseed = 3\n").unwrap();

    let out = dir.path().join("out");
    let output = run(&[
        "collide",
        "--config",
        cfg.to_str().unwrap(),
        "--samples",
        "80",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let manifest: Manifest =
        serde_json::from_slice(&read(&out.join("collide_manifest.json"))).unwrap();
    assert_eq!(manifest.config.run.samples, Some(80));
    assert_eq!(manifest.seed, 3); // untouched key keeps the file's value
}

#[test]
fn mismatched_experiment_name_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(&cfg, "experiment = \"collide\"\n").unwrap();
    let output = run(&["clock", "--config", cfg.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("collide") && stderr.contains("clock"), "{stderr}");
}

#[test]
fn unknown_config_key_is_named_in_the_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(
        &cfg,
        "experiment = \"collide\"\n\n[params]\ngamma = 0.5\nsigmaa = 1.0\n",
    )
    .unwrap();
    let output = run(&["collide", "--config", cfg.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("sigmaa"), "{stderr}");
    assert!(stderr.contains("exp.toml"), "{stderr}");
}

#[test]
fn invalid_gamma_flag_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(&[
        "collide",
        "--gamma=-1.0",
        "--out-dir",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("gamma"), "{stderr}");
}

#[test]
fn failed_checks_exit_three_and_record_the_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(
        &cfg,
        "experiment = \"collide\"\n\n[run]\nsamples = 50\n\n[tolerances]\nresidual = 0.0\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let output = run(&[
        "collide",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(3));
    let manifest: Manifest =
        serde_json::from_slice(&read(&out.join("collide_manifest.json"))).unwrap();
    assert!(!manifest.all_pass);
    assert!(manifest.checks.iter().all(|c| !c.pass));
}

#[test]
fn manifest_file_round_trips_losslessly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let output = run(&[
        "collide",
        "--samples",
        "64",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());

    let bytes = read(&out.join("collide_manifest.json"));
    let parsed: Manifest = serde_json::from_slice(&bytes).unwrap();
    let reserialized = serde_json::to_string_pretty(&parsed).unwrap();
    let reparsed: Manifest = serde_json::from_str(&reserialized).unwrap();
    assert_eq!(parsed, reparsed);
    // The version string is the build's own identity, not a placeholder.
    assert!(!parsed.version.is_empty());
}
