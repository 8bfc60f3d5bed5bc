use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("modlab-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn modlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modlab"))
        .args(args)
        .env_remove("MODLAB_WORKERS")
        .output()
        .unwrap()
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let out = modlab(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    assert_eq!(modlab(&["scan", "--experiment", "nonsense"]).status.code(), Some(1));
    assert_eq!(modlab(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_error_names_the_key() {
    let dir = scratch("badkey");
    let cfg = dir.join("c.json");
    fs::write(&cfg, r#"{"schema_version": 1, "experiment": "evolve", "n_list": "many"}"#).unwrap();
    let out = modlab(&["evolve", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_list"));

    fs::write(&cfg, r#"{"schema_version": 1, "stepz": 3}"#).unwrap();
    let out = modlab(&["evolve", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stepz"));
}

#[test]
fn tolerance_failure_still_writes_rows() {
    let dir = scratch("tight");
    let cfg = dir.join("c.json");
    fs::write(
        &cfg,
        r#"{"schema_version": 1, "experiment": "evolve", "steps": 100, "record_every": 50,
            "thresholds": {"mass_drift": -1.0}}"#,
    )
    .unwrap();
    let out = modlab(&["evolve", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let csv = fs::read_to_string(dir.join("evolve.csv")).unwrap();
    assert!(csv.lines().any(|l| l.contains("mass_drift") && l.contains(",false,")));
    assert!(dir.join("evolve.json").exists());
}

#[test]
fn workers_env_is_read_and_checked() {
    let dir = scratch("workers");
    let run = |value: &str| {
        Command::new(env!("CARGO_BIN_EXE_modlab"))
            .args(["norm", "--out", dir.to_str().unwrap()])
            .env("MODLAB_WORKERS", value)
            .output()
            .unwrap()
    };
    assert_eq!(run("2").status.code(), Some(0));
    assert_eq!(run("two").status.code(), Some(1));
    assert_eq!(run("0").status.code(), Some(1));
}

#[test]
fn scan_writes_csv_with_header() {
    let dir = scratch("scan");
    let cfg = dir.join("c.json");
    fs::write(
        &cfg,
        r#"{"schema_version": 1, "experiment": "illposedness", "n_list": [16, 32, 64],
            "t_list": [0.1], "s_list": [-0.5]}"#,
    )
    .unwrap();
    let out = modlab(&[
        "scan",
        "--experiment",
        "illposedness",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    let code = out.status.code();
    assert!(code == Some(0) || code == Some(2), "{:?}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.join("illposedness.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "experiment,criterion,case,metric,value,lower,upper,passed,note,config_hash"
    );
    assert!(csv.lines().count() > 3);
}
