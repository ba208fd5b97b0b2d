use std::path::Path;
use std::process::{Command, Output};

use relaxed_gabor::gabor::atom;
use relaxed_gabor::io::write_signal_csv;
use relaxed_gabor::numerics::{hermite_signal, Grid, SampledSignal};
use relaxed_gabor::phaseplane::PhasePoint;
use serde_json::Value;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relaxed-gabor")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_signal(path: &Path, f: &SampledSignal) {
    let mut buf = Vec::new();
    write_signal_csv(&mut buf, f).unwrap();
    std::fs::write(path, buf).unwrap();
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn theta_prints_values() {
    let o = cli(&["theta", "--x", "-1"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["theta"][0].as_f64().unwrap() - 1.2919960075).abs() < 1e-9);
    assert!((v["I"].as_f64().unwrap() - 1.96375294e-4).abs() < 1e-12);
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let o = cli(&["analyze", "--input", empty.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));

    let odd = dir.path().join("odd.json");
    std::fs::write(&odd, r#"{"zak_n": 63}"#).unwrap();
    let o = cli(&["--config", odd.to_str().unwrap(), "theta"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("zak_n"));

    let sig = dir.path().join("h0.csv");
    write_signal(&sig, &hermite_signal(0, Grid::baseline()));
    let o = cli(&["expand", "--input", sig.to_str().unwrap(), "--order", "7"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains('7'), "{}", stderr(&o));

    let o = cli(&["--set", "bogus=1", "theta"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn synthesize_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let coeffs = dir.path().join("c.json");
    std::fs::write(&coeffs, r#"[{"k":1,"j":0,"sharp":false,"re":1,"im":0}]"#).unwrap();
    let sig = dir.path().join("s.csv");
    let o = cli(&["synthesize", "--coefficients", coeffs.to_str().unwrap(), "--output", sig.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let want = atom(PhasePoint::new(1.0, 0.0), Grid::baseline()).unwrap();
    let got = relaxed_gabor::io::load_signal_csv(&sig, Grid::baseline()).unwrap();
    assert!(got.relative_error(&want).unwrap() < 1e-12);

    let summary = dir.path().join("a.json");
    let field = dir.path().join("field.csv");
    let o = cli(&[
        "analyze",
        "--input",
        sig.to_str().unwrap(),
        "--output",
        summary.to_str().unwrap(),
        "--field-out",
        field.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&summary);
    assert!((v["parseval_ratio"].as_f64().unwrap() - 1.0).abs() < 1e-3);
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
    let rows = std::fs::read_to_string(&field).unwrap().lines().count();
    assert_eq!(rows, 1 + 257 * 257);
}

#[test]
fn expand_reports_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let sig = dir.path().join("e.csv");
    write_signal(&sig, &atom(PhasePoint::new(0.0, 1.0), Grid::baseline()).unwrap());
    let out = dir.path().join("x.json");
    let o = cli(&["expand", "--input", sig.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&out);
    let hit = v["coefficients"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["k"] == 0 && e["j"] == 1 && e["sharp"] == false)
        .unwrap()
        .clone();
    assert!((hit["re"].as_f64().unwrap() - 1.0).abs() < 1e-3);
    let d = &v["diagnostics"];
    assert!(d["residual"].as_f64().unwrap() < 2e-3);
    assert!((d["l2"].as_f64().unwrap() - 1.0).abs() < 1e-3);
    assert!(d["hdelta"].as_f64().unwrap() > 1.0);
    // The file feeds back into synthesize.
    let back = dir.path().join("b.csv");
    let o = cli(&["synthesize", "--coefficients", out.to_str().unwrap(), "--output", back.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn rotate_quarter_turn_maps_h1() {
    let dir = tempfile::tempdir().unwrap();
    let sig = dir.path().join("h1.csv");
    let h1 = hermite_signal(1, Grid::baseline());
    write_signal(&sig, &h1);
    let out = dir.path().join("r.csv");
    let o = cli(&["rotate", "--input", sig.to_str().unwrap(), "--angle", "-1.5707963267948966", "--output", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = relaxed_gabor::io::load_signal_csv(&out, Grid::baseline()).unwrap();
    // Hermite functions are eigenfunctions: the result is a unimodular multiple of h_1.
    let c = relaxed_gabor::numerics::inner(&r, &h1).unwrap();
    assert!((c.norm() - 1.0).abs() < 1e-6, "{c}");
}

#[test]
fn decompose_writes_report_and_residual() {
    let dir = tempfile::tempdir().unwrap();
    let sig = dir.path().join("e0.csv");
    write_signal(&sig, &atom(PhasePoint::new(0.0, 0.0), Grid::baseline()).unwrap());
    let dom = dir.path().join("k.json");
    std::fs::write(&dom, r#"{"type":"disk","center":[0,0],"radius":2}"#).unwrap();
    let out = dir.path().join("d.json");
    let res = dir.path().join("res.csv");
    let o = cli(&[
        "decompose",
        "--input",
        sig.to_str().unwrap(),
        "--domain",
        dom.to_str().unwrap(),
        "--radius",
        "4",
        "--output",
        out.to_str().unwrap(),
        "--residual-out",
        res.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&out);
    // ⌊4/e⌋ - 1 = 0
    assert_eq!(v["report"]["m"], 0);
    assert!(v["report"]["relative_residual"].as_f64().unwrap() < 0.1);
    assert!(!v["alpha"].as_array().unwrap().is_empty());
    relaxed_gabor::io::load_signal_csv(&res, Grid::baseline()).unwrap();

    let o = cli(&["decompose", "--input", sig.to_str().unwrap(), "--domain", dom.to_str().unwrap(), "--radius", "1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn verify_with_two_theta_terms_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.json");
    let o = cli(&["--set", "theta_terms=2", "--set", "samples=2", "verify", "--output", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("theta_quasi_periodicity"));
    let v = json(&out);
    assert_eq!(v["passed"], false);
}
