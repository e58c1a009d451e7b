use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nodal_lab::runner::{ExperimentConfig, SEED_ENV};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_nodal-lab"));
    c.env_remove(SEED_ENV);
    c
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn small_config(dir: &Path) -> PathBuf {
    let p = dir.join("small.toml");
    fs::write(&p, "lambda_max = 300.0\neigenvalue_count = 3\nensemble_size = 2\nseed = 4\n").unwrap();
    p
}

#[test]
fn shipped_configs_parse() {
    for name in ["default.toml", "torus3.toml"] {
        let cfg = ExperimentConfig::load(&configs().join(name)).unwrap();
        cfg.validate().unwrap();
    }
    let d = ExperimentConfig::load(&configs().join("default.toml")).unwrap();
    assert_eq!(d, ExperimentConfig::default());
}

#[test]
fn sweep_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let mut files = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = bin()
            .args(["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "sweep", "--kind", "nodal"])
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        files.push(fs::read(out.join("nodal_measure.jsonl")).unwrap());
        assert!(out.join("nodal_measure.csv").exists());
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(String::from_utf8_lossy(&files[0]).lines().count(), 6);
}

#[test]
fn seed_environment_and_flag() {
    let o = bin().env(SEED_ENV, "5").args(["nodal", "--lambda", "25"]).output().unwrap();
    assert!(o.status.success());
    assert_eq!(json(&o)["seed"], 5);
    let o = bin().env(SEED_ENV, "5").args(["--seed", "9", "nodal", "--lambda", "25"]).output().unwrap();
    assert_eq!(json(&o)["seed"], 9);
    let a = json(&bin().args(["--seed", "9", "nodal", "--lambda", "25"]).output().unwrap());
    assert_eq!(a["measure"], json(&o)["measure"]);
}

#[test]
fn exit_codes() {
    let o = bin().args(["nodal", "--lambda", "3"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not an eigenvalue"));
    let o = bin().env(SEED_ENV, "x").args(["nodal", "--lambda", "25"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().arg("verify").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["ok"], true);
}

#[test]
fn fit_and_report_read_records() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("o");
    let args = ["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    assert!(bin().args(args).args(["sweep", "--kind", "nodal"]).status().unwrap().success());
    let records = out.join("nodal_measure.jsonl");
    let o = bin().args(args).args(["fit", records.to_str().unwrap()]).output().unwrap();
    assert!(o.status.success());
    let slope = json(&o)["fit"]["slope"].as_f64().unwrap();
    assert!(slope > 0.3 && slope < 0.7, "{slope}");
    let o = bin().args(args).args(["report", records.to_str().unwrap()]).output().unwrap();
    assert!(o.status.success());
    let csv = fs::read_to_string(out.join("nodal_measure.csv")).unwrap();
    assert!(csv.starts_with("lambda,"));
}

#[test]
fn doubling_and_cascade_commands() {
    let o = bin()
        .args(["doubling", "--lambda", "25", "--center", "1,1.5,0", "--half-side", "0.19", "--lifted"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert!(v["tilde"]["value"].as_f64().unwrap() >= v["index"]["index"].as_f64().unwrap());
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["--out", dir.path().to_str().unwrap(), "cascade", "--lambda", "100"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("cascade_100_0.jsonl").exists());
}
