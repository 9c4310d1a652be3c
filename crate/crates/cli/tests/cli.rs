use std::path::Path;
use std::process::{Command, Output};

fn unduloid(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_unduloid"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn gen_writes_full_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = unduloid(&["gen", "--necksize", "1.5", "--grid", "200x100"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let obj = std::fs::read_to_string(dir.path().join("surface_n1.5000.obj")).unwrap();
    assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 20000);
    let csv = std::fs::read_to_string(dir.path().join("profile_n1.5000.csv")).unwrap();
    assert!(csv.starts_with("s,x,r,angle,t"));
}

#[test]
fn modes_lists_one_row_per_mode() {
    let dir = tempfile::tempdir().unwrap();
    let o = unduloid(&["modes", "--necksize", "1.5", "--m-max", "5"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("modes_n1.5000.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 6);
    assert!(String::from_utf8_lossy(&o.stdout).contains("nondegenerate"));
}

#[test]
fn verify_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = unduloid(&["verify", "--necksize", "1.5"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["pass"], true);
    assert!(report["count"].as_u64().unwrap() > 30);
}

#[test]
fn classify_and_cousin_write_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = unduloid(&["classify", "--necksize", "1.2", "--grid", "200x50", "--t-range", "2"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("classify_n1.2000.json")).unwrap()).unwrap();
    assert!((v["distance"].as_f64().unwrap() - 1.2).abs() < 5e-3);
    assert!(v["dA"].is_array());

    let o = unduloid(&["cousin", "--necksize", "1.2", "--grid", "100x40", "--t-range", "1"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("cousin_n1.2000.json")).unwrap()).unwrap();
    assert!(v["geometry"]["max_holonomy"].as_f64().unwrap() < 1e-10);
    assert!(dir.path().join("cousin_n1.2000.obj").exists());
}

#[test]
fn dims_table_covers_requested_range() {
    let dir = tempfile::tempdir().unwrap();
    let o = unduloid(&["dims", "--necksize", "1.5", "--k-max", "4"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("dims.json")).unwrap()).unwrap();
    assert_eq!(v["table"].as_array().unwrap().len(), 6);
    assert_eq!(v["consistency"][0]["consistent"], true);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["gen", "--necksize", "4.0"][..],
        &["gen", "--grid", "200by100"][..],
        &["modes", "--bogus"][..],
    ] {
        let o = unduloid(args, dir.path());
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn unreadable_config_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = unduloid(&["verify", "--config", "/nonexistent/config.json"], dir.path());
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bad_config_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(&path, r#"{"necksizes": [1.0], "unknown_key": 3}"#).unwrap();
    let o = unduloid(&["dims", "--config", path.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(&path, r#"{"necksizes": [0.9], "n_t": 64, "n_phi": 16}"#).unwrap();
    let o = unduloid(&["gen", "--config", path.to_str().unwrap(), "--grid", "80x20"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let obj = std::fs::read_to_string(dir.path().join("surface_n0.9000.obj")).unwrap();
    assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 1600);
}

#[test]
fn failed_checks_exit_1() {
    // A loose integrator tolerance breaks the monodromy determinant bound.
    let dir = tempfile::tempdir().unwrap();
    let o = unduloid(&["verify", "--necksize", "1.5", "--tol", "1e-4"], dir.path());
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["pass"], false);
}
