use std::path::Path;
use std::process::{Command, Output};

fn vasctherm(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_vasctherm"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn csvs(dir: &Path) -> Vec<(String, String)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), read(&p)))
        .collect();
    v.sort();
    v
}

#[test]
fn solve_writes_outputs_and_reruns_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let o = vasctherm(
        &["solve", "--n", "20", "--total-time", "20", "--flux", "2000", "--layout", "serpentine", "--out", a.to_str().unwrap()],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let obs = read(&a.join("observables.csv"));
    assert_eq!(obs.lines().count(), 21);
    assert!(obs.starts_with("t,mst,theta_outlet,eta,energy_residual\n"));
    let snap = read(&a.join("field_snapshot.csv"));
    assert_eq!(snap.lines().count(), 441 + 1);

    // rerun from the echoed config with a different worker count
    let b = tmp.path().join("b");
    let cfg = a.join("config.json");
    let o = vasctherm(
        &["solve", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap()],
        &[("VASCTHERM_THREADS", "1")],
    );
    assert_eq!(code(&o), 0);
    assert_eq!(csvs(&a), csvs(&b));
    assert_eq!(read(&a.join("report.json")), read(&b.join("report.json")));
}

#[test]
fn exit_codes_distinguish_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    assert_eq!(code(&vasctherm(&["solve", "--material", "unobtainium", "--out", out], &[])), 2);
    assert_eq!(code(&vasctherm(&["solve", "--layout", "zigzag", "--out", out], &[])), 2);
    assert_eq!(code(&vasctherm(&["solve", "--steady-only", "--out", out], &[("VASCTHERM_THREADS", "0")])), 2);

    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"mesh": {"n": 8}, "fluxx": 3}"#).unwrap();
    assert_eq!(code(&vasctherm(&["solve", "--config", bad.to_str().unwrap(), "--out", out], &[])), 2);

    let starved = tmp.path().join("starved.json");
    std::fs::write(&starved, r#"{"mesh": {"n": 8}, "steady_only": true, "newton": {"max_iters": 1}}"#).unwrap();
    let o = vasctherm(&["solve", "--config", starved.to_str().unwrap(), "--out", out], &[]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("steady solve"));
}

#[test]
fn experiments_emit_paired_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let fr = tmp.path().join("fr");
    let o = vasctherm(
        &["flow-reversal", "--n", "8", "--total-time", "10", "--layout", "asymmetric", "--out", fr.to_str().unwrap()],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(read(&fr.join("reversal.csv")).lines().count(), 11);
    assert!(fr.join("forward/observables.csv").exists() && fr.join("reverse/observables.csv").exists());

    let cp = tmp.path().join("cp");
    let o = vasctherm(&["compare-props", "--n", "8", "--steady-only", "--out", cp.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_str(&read(&cp.join("comparison_report.json"))).unwrap();
    assert_eq!(report["pass_steady"], true);
    assert_eq!(report["cmp"]["mode"], "CMP");
    assert!(cp.join("arclength_comparison.csv").exists());
}

#[test]
fn mesh_and_verify_subcommands() {
    let tmp = tempfile::tempdir().unwrap();
    let m = tmp.path().join("m");
    assert_eq!(code(&vasctherm(&["mesh", "--n", "10", "--out", m.to_str().unwrap()], &[])), 0);
    assert_eq!(read(&m.join("nodes.csv")).lines().count(), 122);
    assert!(read(&m.join("channel.csv")).lines().count() > 2);

    let v = tmp.path().join("v");
    let o = vasctherm(&["verify", "--sizes", "8,16,32", "--states", "2", "--out", v.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let table = read(&v.join("convergence.csv"));
    assert_eq!(table.lines().count(), 1 + 4 * 3);
    assert_eq!(read(&v.join("jacobian.csv")).lines().count(), 17);
}
