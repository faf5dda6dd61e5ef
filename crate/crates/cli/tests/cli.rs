use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn muskat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_muskat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn zero_data_gives_a_zero_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"grid": {"n": 32}, "solver": {"t_final": 0.1}}"#);
    let out = dir.path().join("run");
    let o = muskat(&["simulate", "--config", &cfg, "--output", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let monitors = fs::read_to_string(out.join("monitors.csv")).unwrap();
    assert!(column(&monitors, "h2").iter().all(|v| *v == 0.0));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["grid"]["n"], 32);
    assert!(manifest["version"].is_string());
    assert!(out.join("state_000000.csv").exists());
}

#[test]
fn small_data_run_is_monotone_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/small_data.json");
    let cfg = cfg.to_str().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = muskat(&["simulate", "--config", cfg, "--output", out.to_str().unwrap(), "--quiet"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let monitors = fs::read_to_string(a.join("monitors.csv")).unwrap();
    for s in ["h0", "h2", "h4"] {
        let v = column(&monitors, s);
        assert!(v.windows(2).all(|w| w[1] <= w[0] + 1e-8), "{s} not monotone");
    }
    for name in ["monitors.csv", "manifest.json", "state_000000.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn separation_precondition_exits_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{
  "params": {"lower": {"kind": "flat", "depth": 1.0}},
  "initial": {"modes": [{"k": 1, "amplitude": 0.3}]},
  "solver": {"evolution": {"separation": 0.4}}
}"#,
    );
    let o = muskat(&["simulate", "--config", &cfg, "--quiet"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains(":4:"));
}

#[test]
fn unknown_key_is_line_anchored() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{\n  \"grid\": {\"n\": 32},\n  \"gird\": 1\n}");
    let o = muskat(&["simulate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("config.json:3:"));
}

#[test]
fn large_picard_data_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"grid": {"n": 32}, "initial": {"modes": [{"k": 1, "amplitude": 1.0}]},
            "solver": {"method": "picard", "t_final": 0.1}}"#,
    );
    let out = dir.path().join("run");
    let o = muskat(&["simulate", "--config", &cfg, "--output", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(o.status.code(), Some(2));
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("not contracting"));
}

#[test]
fn verify_dispersion_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = muskat(&["verify", "dispersion", "--output", dir.path().to_str().unwrap(), "--quiet"]);
    assert_eq!(o.status.code(), Some(0));
    let report = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let mut lines = report.lines();
    assert_eq!(lines.next(), Some("check,expected,measured,tolerance,pass"));
    assert_eq!(lines.filter(|l| l.ends_with(",true")).count(), 14);
}

#[test]
fn unknown_suite_exits_with_1() {
    let o = muskat(&["verify", "nonsense", "--quiet"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dispersion"));
}

#[test]
fn bad_arguments_exit_with_1() {
    assert_eq!(muskat(&["simulate"]).status.code(), Some(1));
}
