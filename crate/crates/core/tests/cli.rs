use std::path::Path;
use std::process::{Command, Output};

fn hammer(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hammer"))
        .args(args)
        .current_dir(cwd)
        .env_remove("HAMMER_OUTPUT_ROOT")
        .output()
        .expect("run hammer binary")
}

#[test]
fn unknown_flags_and_subcommands_fail_with_usage() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["train", "--bogus"][..], &["frobnicate"], &[]] {
        let out = hammer(args, dir.path());
        assert!(!out.status.success(), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"), "{args:?}");
    }
    let out = hammer(&["train", "--mode", "telepathy", "--episodes", "1"], dir.path());
    assert!(!out.status.success());
}

#[test]
fn gradcheck_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = hammer(&["gradcheck", "--instances", "20"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    // an impossible tolerance turns the same report into a failure
    let out = hammer(&["gradcheck", "--instances", "5", "--tolerance", "0"], dir.path());
    assert!(!out.status.success());
}

#[test]
fn train_writes_a_complete_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("base.txt");
    std::fs::write(&cfg, "mode = random_message\nmessage_length = 3\nlocal.batch_size = 150\n").unwrap();
    let out = hammer(
        &["train", "--config", "base.txt", "--episodes", "4", "--seed", "3", "--output-dir", "runs"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("runs/random_message-nav-n3-m3-seed3");
    for f in ["config.txt", "metrics.csv", "checkpoint.txt", "manifest.txt"] {
        assert!(run.join(f).is_file(), "{f} missing");
    }
    let rows = hammer_core::exp::read_metrics(&run.join("metrics.csv")).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows[1].local_loss.is_some(), "150-transition batches update every second episode");
    assert!(rows[0].local_loss.is_none());
    let manifest = std::fs::read_to_string(run.join("manifest.txt")).unwrap();
    assert!(manifest.contains("seed = 3"));
    assert!(manifest.contains("version = "));
    let config = std::fs::read_to_string(run.join("config.txt")).unwrap();
    assert!(config.contains("local.batch_size = 150"));

    let out = hammer(&["aggregate", "runs/random_message-nav-n3-m3-seed3/metrics.csv"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("std error n/a"));

    let out = hammer(
        &["plot", "runs/random_message-nav-n3-m3-seed3/metrics.csv", "--out", "curve.svg", "--window", "2"],
        dir.path(),
    );
    assert!(out.status.success());
    assert!(std::fs::read_to_string(dir.path().join("curve.svg")).unwrap().contains("<polyline"));
}

#[test]
fn output_root_variable_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hammer"))
        .args(["train", "--mode", "independent", "--episodes", "1", "--output-dir", "ignored"])
        .current_dir(dir.path())
        .env("HAMMER_OUTPUT_ROOT", dir.path().join("elsewhere"))
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("elsewhere/independent-nav-n3-seed1/metrics.csv").is_file());
    assert!(!dir.path().join("ignored").exists());
}

#[test]
fn set_flag_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let out = hammer(&["train", "--episodes", "1", "--set", "local.warp=9"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("local.warp"));
}
