//! Exit codes and JSON output of the command-line tool.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_twistvan"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

#[test]
fn predict_emits_json() {
    let out = bin()
        .args(["predict", "--sign", "minus", "--q", "2", "--X", "100000000", "--P", "20000", "--curve"])
        .arg(data("11a.cfg"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["a_q"], -2);
    for key in ["q", "R_main", "beta_plus", "beta_minus", "R_second", "P", "stability"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| bin().args(args).output().unwrap().status.code();
    let cfg = data("11a.cfg");
    let cfg = cfg.to_str().unwrap();
    assert_eq!(code(&["predict", "--curve", cfg, "--sign", "minus", "--q", "11", "--X", "100"]), Some(2));
    assert_eq!(code(&["predict", "--curve", "/nonexistent.cfg", "--sign", "minus", "--q", "3", "--X", "100"]), Some(4));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.twv");
    let out = out.to_str().unwrap();
    let lv = |gap: &str| code(&["lvalues", "--curve", cfg, "--sign", "minus", "--X", "300", "--gap-min", gap, "--out", out]);
    assert_eq!(lv("1e30"), Some(3));
    assert_eq!(lv("1000"), Some(0));
    let csv = dir.path().join("ratios.csv");
    assert_eq!(
        code(&["ratios", "--curve", cfg, "--sign", "minus", "--records", out, "--q-max", "20", "--P", "3000", "--out", csv.to_str().unwrap()]),
        Some(0)
    );
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("curve,q,a_q,resid1,resid2,"));
    let hist = code(&["hist", "--in", csv.to_str().unwrap(), "--column", "resid1"]);
    assert_eq!(hist, Some(0));
}
