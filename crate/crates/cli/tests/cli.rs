use std::path::Path;
use std::process::{Command, Output};

use symrec::measurements::MeasurementSet;

fn symrec(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symrec"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .env_remove("SYMREC_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path, stem: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join(format!("{stem}.manifest.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = symrec(dir.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["expand", "bounds", "pack", "erm", "recover", "probe", "fano-sim", "anticonc", "teacher"] {
        assert!(text.contains(sub), "help lists {sub}");
    }
}

#[test]
fn unknown_flag_prints_usage_and_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = symrec(dir.path(), &["recover", "--bogus", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let out = symrec(dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn covering_bound_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = symrec(dir.path(), &["bounds", "covering", "--d", "10", "--r", "2", "--ell", "3", "--eps", "0.1", "--C", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("bounds-covering.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "bound_name,parameters,value,constants");
    let value: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
    let want = 2.0 * 2.0 * 3.0 * 10.0 * 20f64.ln() + 2.0 * 9.0 * 10.0 * 10f64.ln();
    assert!((value - want).abs() < 1e-9 * want);
    let m = manifest(dir.path(), "bounds-covering");
    assert_eq!(m["constants_used"]["C"], 1.0);
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn config_file_sits_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"d": 12, "r": 3, "eps": 0.5}"#).unwrap();
    let out = symrec(dir.path(), &["bounds", "covering", "--config", cfg.to_str().unwrap(), "--r", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(dir.path(), "bounds-covering");
    assert_eq!(m["config"]["d"], 12);
    assert_eq!(m["config"]["r"], 1);
    assert_eq!(m["config"]["eps"], 0.5);
    assert_eq!(m["config"]["ell"], 3);

    std::fs::write(&cfg, r#"{"dd": 12}"#).unwrap();
    let out = symrec(dir.path(), &["bounds", "covering", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn invalid_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = symrec(dir.path(), &["bounds", "threshold", "--ell", "3", "--C", "5"]);
    assert_eq!(out.status.code(), Some(1));
    let out = symrec(dir.path(), &["teacher", "--dist", "nonsense"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn capacity_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = symrec(dir.path(), &["erm", "--d", "30", "--ell", "5", "--n", "100", "--trials", "1"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn failed_assertion_exits_three_and_keeps_evidence() {
    let dir = tempfile::tempdir().unwrap();
    let out = symrec(dir.path(), &["probe", "--n", "3", "--restarts", "2", "--expect-above", "1e9"]);
    assert_eq!(out.status.code(), Some(3));
    let m = manifest(dir.path(), "probe");
    assert!(m["assertion_failure"].is_string());
    assert!(dir.path().join("probe.csv").exists());
}

#[test]
fn recover_reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["recover", "--d", "4", "--ell", "3", "--r", "1", "--C", "19", "--trials", "4", "--seed", "42"];
    assert_eq!(symrec(a.path(), &args).status.code(), Some(0));
    assert_eq!(symrec(b.path(), &args).status.code(), Some(0));
    for f in ["recover.csv", "recover.manifest.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let csv = std::fs::read_to_string(a.path().join("recover.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with("trial,n,rel_error,residual_inf"));
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_symrec"))
        .args(["bounds", "cw"])
        .env("SYMREC_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("bounds-cw.csv").exists());
}

#[test]
fn teacher_measurements_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = symrec(dir.path(), &["teacher", "--d", "3", "--r", "2", "--ell", "2", "--n", "10", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let ms = MeasurementSet::from_csv(&std::fs::read_to_string(dir.path().join("teacher.csv")).unwrap()).unwrap();
    assert_eq!((ms.len(), ms.d(), ms.ell()), (10, 3, 2));
    let weights = std::fs::read_to_string(dir.path().join("teacher_weights.csv")).unwrap();
    assert_eq!(weights.lines().count(), 3);
    assert!(dir.path().join("teacher_weights.manifest.json").exists());
}

#[test]
fn every_subcommand_runs() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 7] = [
        &["expand", "--terms", "[[1.0, [1, 2]], [-1.0, [0.5, 0]]]", "--ell", "3"],
        &["pack", "--d", "32", "--ell", "5", "--r", "2", "--members", "6", "--epsilon", "0.5"],
        &["erm", "--n", "5", "--trials", "3"],
        &["fano-sim", "--trials", "200", "--ns", "0,2,8"],
        &["anticonc", "--samples", "20000"],
        &["bounds", "fano", "--n", "2"],
        &["bounds", "covering-cp"],
    ];
    for args in runs {
        let out = symrec(dir.path(), args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let expand = std::fs::read_to_string(dir.path().join("expand.csv")).unwrap();
    assert_eq!(expand.lines().count(), 1 + 4);
    assert!(expand.starts_with("index,alpha,n_alpha,t_alpha"));
    assert!(dir.path().join("pack_codebook.csv").exists());
}
