use gietlab::lab::config::ExperimentConfig;
use gietlab::lab::report::Summary;
use gietlab::lab::{run, Experiment};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

fn config(preset: &str, out: &Path, overrides: &[&str]) -> ExperimentConfig {
    let doc = serde_json::json!({ "preset": preset, "output_dir": out.to_str().unwrap() }).to_string();
    let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    ExperimentConfig::from_json(Some(&doc), &overrides).unwrap()
}

fn hashes(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let bytes = std::fs::read(&p).unwrap();
        out.insert(p.file_name().unwrap().to_string_lossy().into_owned(), format!("{:x}", Sha256::digest(&bytes)));
    }
    out
}

#[test]
fn experiment_names() {
    assert_eq!("e3".parse::<Experiment>().unwrap(), Experiment::E3);
    assert!("E9".parse::<Experiment>().is_err());
    assert_eq!(Experiment::ALL.len(), 8);
}

#[test]
fn golden_fixed_point_run() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(Experiment::E2, &config("golden", tmp.path(), &["grid_size=65"]));
    assert_eq!(out.exit_code, 0, "{:?}", out.summary);
    let c0 = out.summary.checks.iter().find(|c| c.name == "fixed_point_c0").unwrap();
    assert!(c0.value <= 1e-10);
    let dir = out.dir.unwrap();
    assert_eq!(dir, tmp.path().join("E2").join("golden"));
    for a in &out.summary.artifacts {
        assert!(dir.join(a).exists(), "{a}");
    }
    assert!(out.summary.artifacts.contains(&"config.json".to_string()));
    let back: Summary = serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert!(back.pass);
    let cfg: ExperimentConfig = serde_json::from_str(&std::fs::read_to_string(dir.join("config.json")).unwrap()).unwrap();
    assert_eq!(cfg.grid_size, 65);
}

#[test]
fn genus_two_search() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(Experiment::E1, &config("d4", tmp.path(), &["system.loop=search", "search.max_len=8"]));
    assert_eq!(out.exit_code, 0, "{:?}", out.summary);
    assert_eq!(out.summary.metrics["genus"], 2);
    assert_eq!(out.summary.metrics["marked_points"], 1);
    assert!(out.summary.metrics["loops_accepted"].as_u64().unwrap() >= 1);
}

#[test]
fn invalid_permutation_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = config("golden", tmp.path(), &[]);
    cfg.system.permutation = vec![1, 2];
    let out = run(Experiment::E2, &cfg);
    assert_eq!(out.exit_code, 2);
    assert!(out.dir.is_none());
    assert!(out.summary.error.is_some());
    assert_eq!(std::fs::read_dir(tmp.path()).unwrap().count(), 0);
}

#[test]
fn runs_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let a = run(Experiment::E3, &config("golden", tmp.path(), &["grid_size=33", "threads=1"]));
    let first = hashes(a.dir.as_ref().unwrap());
    let b = run(Experiment::E3, &config("golden", tmp.path(), &["grid_size=33", "threads=4"]));
    let mut second = hashes(b.dir.as_ref().unwrap());
    let mut first = first;
    // The config copy records the thread count.
    first.remove("config.json");
    second.remove("config.json");
    assert_eq!(first, second);
    assert!(first.len() >= 2);
}

#[test]
fn overrides_and_unknown_keys() {
    let cfg = ExperimentConfig::from_json(None, &["trials=3".into(), "levels.shoot=9".into()]).unwrap();
    assert_eq!((cfg.trials, cfg.levels.shoot), (3, 9));
    assert!(ExperimentConfig::from_json(None, &["nope=1".into()]).is_err());
    assert!(ExperimentConfig::from_json(Some(r#"{"levels": {"nope": 1}}"#), &[]).is_err());
    assert!(ExperimentConfig::from_json(Some(r#"{"preset": "missing"}"#), &[]).is_err());
    assert!(ExperimentConfig::from_json(Some("not json"), &[]).is_err());
    let d4 = ExperimentConfig::preset("d4").unwrap();
    assert_eq!(d4.system.permutation, vec![4, 3, 2, 1]);
}

#[test]
fn cli() {
    let exe = env!("CARGO_BIN_EXE_gietlab");
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = format!("output_dir=\"{}\"", tmp.path().display());
    let st = Command::new(exe)
        .args(["run", "E2", "--preset", "golden", "--set", "grid_size=33", "--set", &out_dir])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stderr));
    let stdout = String::from_utf8_lossy(&st.stdout);
    assert!(stdout.contains("PASS fixed_point_c0"));

    let show = Command::new(exe).args(["show"]).arg(tmp.path().join("E2/golden")).output().unwrap();
    assert_eq!(show.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&show.stdout).contains("fixed_point_c1"));

    let bad = Command::new(exe).args(["run", "E2", "--set", "system.permutation=[1,2]", "--set", &out_dir]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("error ["));

    let search = Command::new(exe).args(["search-loops", "--permutation", "4,3,2,1", "--max-len", "8", "--accepted"]).output().unwrap();
    assert_eq!(search.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&search.stdout).contains("ttbtbbtb"));
}
