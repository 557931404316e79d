use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn thinspec(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thinspec"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("THINSPEC_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn static_run_writes_csv_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("static");
    let o = thinspec(&["static"], &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("static.csv")).unwrap();
    assert!(csv.starts_with("t[time],H[energy]"), "{}", &csv[..60]);
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["scenario"]["params"]["N"], 100);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&thinspec(&["kz"], &a)), 0);
    assert_eq!(code(&thinspec(&["kz"], &b)), 0);
    for f in ["kz.csv", "summary.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn sweep_output_does_not_depend_on_workers() {
    let tmp = tempfile::tempdir().unwrap();
    let axes = ["sweep", "--axis", "t0_over_that=geom:1e-1:1e-3:3", "--axis", "N=100,400"];
    let (a, b) = (tmp.path().join("w1"), tmp.path().join("w3"));
    let mut args1 = axes.to_vec();
    args1.extend(["--workers", "1"]);
    let mut args3 = axes.to_vec();
    args3.extend(["--workers", "3"]);
    assert_eq!(code(&thinspec(&args1, &a)), 0);
    assert_eq!(code(&thinspec(&args3, &b)), 0);
    for f in ["sweep.csv", "sweep_summary.json", "point_00005/kz.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    assert_eq!(code(&thinspec(&["check", "no-such-check"], &out)), 2);
    assert_eq!(code(&thinspec(&["figure", "7"], &out)), 2);
    let bad = write_config(tmp.path(), "bad.json", r#"{"params": {"J": -1, "delta": 1, "H0": 0.1, "N": 100}}"#);
    assert_eq!(code(&thinspec(&["static", "--config", &bad], &out)), 2);
    let unknown = write_config(tmp.path(), "unknown.json", r#"{"colour": "blue"}"#);
    assert_eq!(code(&thinspec(&["static", "--config", &unknown], &out)), 2);
    let mismatch = write_config(tmp.path(), "kz.json", r#"{"run": {"kind": "kz"}}"#);
    assert_eq!(code(&thinspec(&["static", "--config", &mismatch], &out)), 2);
    assert_eq!(code(&thinspec(&["sweep", "--axis", "colour=1,2"], &out)), 2);
}

#[test]
fn failed_verdict_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("we");
    let pass = thinspec(&["check", "wigner-eckart-vs-clebsch-gordan"], &out);
    assert_eq!(code(&pass), 0);
    let fail = thinspec(&["check", "wigner-eckart-vs-clebsch-gordan", "--tol", "1e-300"], &out);
    assert_eq!(code(&fail), 1);
    assert!(String::from_utf8_lossy(&fail.stdout).contains("FAIL"));
}

#[test]
fn numerical_failure_exits_3_with_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("grid");
    let cfg = write_config(
        tmp.path(),
        "grid.json",
        r#"{"grid": {"t_end_over_that": 2, "points": 11},
            "grid_solver": {"s_max": 5, "n_points": 200, "dt": 0.01}}"#,
    );
    let o = thinspec(&["check", "exact-vs-grid", "--config", &cfg], &out);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let diag: serde_json::Value = serde_json::from_slice(&fs::read(out.join("diagnostics.json")).unwrap()).unwrap();
    assert!(diag.is_object());
}
