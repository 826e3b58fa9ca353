use std::process::Command;

fn netlms() -> Command {
    Command::new(env!("CARGO_BIN_EXE_netlms"))
}

#[test]
fn run_without_source_is_a_usage_error() {
    let out = netlms().arg("run").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"schema_version": 1, "model": {"dim": "three"}}"#).unwrap();
    let out = netlms()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("model.dim"), "{err}");
}

#[test]
fn table4_preset_passes_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = netlms()
        .args(["run", "--preset", "table4-check", "--trials", "20", "--iters", "1500", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["manifest.json", "summary.json", "table4.csv"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
}

#[test]
fn show_prints_a_loadable_run_file() {
    let out = netlms().args(["show", "fig6-n20", "--seed", "4"]).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["model"]["noise_vars"].as_array().unwrap().len(), 20);
}
