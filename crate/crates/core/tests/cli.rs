use std::path::Path;
use std::process::{Command, Output};

fn sketchlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sketchlab"))
        .args(args)
        .env_remove("SKETCHLAB_SEED")
        .output()
        .expect("spawn sketchlab")
}

fn sweep(out: &Path) -> Output {
    sketchlab(&["query-sweep", "--epsilon", "0.3", "--n", "600", "--r", "1,4", "--out", out.to_str().unwrap()])
}

#[test]
fn query_sweep_writes_reproducible_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = sweep(a.path());
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    assert_eq!(sweep(b.path()).status.code(), Some(0));
    for name in [
        "query_sweep_ascending.csv",
        "query_sweep_ascending.svg",
        "query_sweep_descending.csv",
        "query_sweep_descending.svg",
    ] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(!x.is_empty(), "{name} is empty");
        assert_eq!(x, y, "{name} differs between runs");
    }
    let csv = std::fs::read_to_string(a.path().join("query_sweep_ascending.csv")).unwrap();
    assert!(csv.lines().next().unwrap().contains("ratio"));
    // two query counts, 50 prefixes each
    assert_eq!(csv.lines().count(), 1 + 2 * 50);
}

#[test]
fn unwritable_output_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let out = sweep(&blocker.join("sub"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn bad_flags_are_errors() {
    assert_eq!(sketchlab(&["query-sweep", "--epsilon", "2"]).status.code(), Some(2));
    assert_eq!(sketchlab(&["nrmse", "--seeds", "a..b"]).status.code(), Some(2));
}

#[test]
fn starved_theorem_check_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = sketchlab(&[
        "theorem-check",
        "standard",
        "--k",
        "16",
        "--n",
        "2000",
        "--r",
        "1",
        "--seeds",
        "0..3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("standard_theorem.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn json_config_is_loaded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("spec.json");
    let out = dir.path().join("out");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"experiment": "estimator-nrmse", "k": 16, "cardinality": 500, "trials": 50, "seeds": [0], "out": {:?}}}"#,
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let res = sketchlab(&["nrmse", "--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = std::fs::read_to_string(out.join("nrmse.csv")).unwrap();
    assert!(csv.lines().count() >= 4);

    std::fs::write(&cfg, r#"{"experiment": "estimator-nrmse", "k": 16, "seeds": [0], "bogus": 1}"#).unwrap();
    assert_eq!(sketchlab(&["nrmse", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}
