use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

use invhess_core::funcspace::spec::Spec;
use invhess_core::propi::property_i_residual;

fn spec(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("specs").join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_invhess")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let out = run(&all);
    let v = serde_json::from_slice(&out.stdout).expect("json report");
    (out.status.code().unwrap(), v)
}

fn column(report: &Value, name: &str) -> usize {
    report["columns"].as_array().unwrap().iter().position(|c| c == name).unwrap()
}

#[test]
fn separable_passes_every_row() {
    let out = run(&["check-propi", "--spec", &spec("separable.json"), "--samples", "200"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().ends_with(",status"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 200);
    assert!(rows.iter().all(|r| r.ends_with(",ZERO,ZERO,ZERO,PASS")));
}

#[test]
fn rotated_characteristics_at_thirty_degrees() {
    let (code, r) = json(&["characteristics", "--spec", &spec("rotated30.json")]);
    assert_eq!(code, 0);
    let angle = r["summary"]["angle"].as_f64().unwrap();
    assert!((angle - std::f64::consts::FRAC_PI_6).abs() < 1e-10);
}

#[test]
fn mixed_exponential_brackets_match_residuals() {
    let args = ["poisson-commute", "--spec", &spec("mixedexp.json"), "--domain", &spec("unit_square.json")];
    let (code, r) = json(&[&args[..], &["--samples", "30"]].concat());
    assert_eq!(code, 1);
    let f = Spec::from_json(&std::fs::read_to_string(spec("mixedexp.json")).unwrap()).unwrap().to_function().unwrap();
    let (b, class) = (column(&r, "bracket"), column(&r, "class"));
    let rows = r["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 30);
    for row in rows {
        let x: Vec<f64> = (0..2).map(|i| row[i].as_f64().unwrap()).collect();
        let oracle = property_i_residual(&f, &x).unwrap().max_abs;
        let bracket = row[b].as_f64().unwrap();
        assert!((bracket - oracle).abs() <= 1e-9 * oracle, "{x:?}");
        assert_eq!(row[class], "NONZERO");
    }
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for i in 0..2 {
        let path = dir.path().join(format!("r{i}.csv"));
        let out = run(&[
            "legendre",
            "--spec",
            &spec("rotated30.json"),
            "--samples",
            "15",
            "--radius",
            "1.5",
            "--output",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        outputs.push(std::fs::read(path).unwrap());
    }
    assert!(!outputs[0].is_empty());
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn rows_are_sorted() {
    let (_, r) = json(&["check-propi", "--spec", &spec("separable.json"), "--samples", "50"]);
    let xs: Vec<(f64, f64)> =
        r["rows"].as_array().unwrap().iter().map(|row| (row[0].as_f64().unwrap(), row[1].as_f64().unwrap())).collect();
    assert!(xs.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["check-propi"]).status.code(), Some(2));
    assert_eq!(run(&["check-propi", "--spec", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(run(&["check-propi", "--spec", &spec("separable.json"), "--samples", "0"]).status.code(), Some(2));
    assert_eq!(run(&["check-propi", "--spec", &spec("separable.json"), "--zero-tol", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["handles-build", "--spec", &spec("separable.json")]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"kind\": \"quadratic\", \"dim\": 2, \"params\": {\"k\": -1}}").unwrap();
    assert_eq!(run(&["check-propi", "--spec", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn failing_certificate_is_a_math_failure() {
    let text =
        std::fs::read_to_string(spec("two_handle.json")).unwrap().replace("\"amplitude\": 2.0", "\"amplitude\": -5.0");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("neg.json");
    std::fs::write(&path, text).unwrap();
    let out = run(&["handles-build", "--spec", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("convexity certificate"));
}

#[test]
fn handle_family_commands() {
    let (code, r) = json(&["handles-build", "--spec", &spec("two_handle.json")]);
    assert_eq!(code, 0);
    assert_eq!(r["summary"]["conjugate_k"], 0.25);
    let end = column(&r, "image_end");
    assert_eq!(r["rows"][1][end], "none");
    let (code, r) = json(&["handles-check", "--spec", &spec("two_handle.json")]);
    assert_eq!(code, 0);
    assert!(r["summary"]["no_common_min"].as_f64().unwrap() > 1e-2);
    let (code, _) = json(&["legendre", "--spec", &spec("two_handle.json"), "--samples", "20"]);
    assert_eq!(code, 0);
}

#[test]
fn lift_and_orthogonal_columns() {
    let points = "0,0;0.5,0.2;0.1,-0.3";
    let (code, r) = json(&["lift", "--spec", &spec("separable.json"), "--points", points, "--require-c"]);
    assert_eq!(code, 0);
    assert!(r["summary"]["c_drift"].as_f64().unwrap() < 1e-8);
    let (code, r) = json(&["lift", "--spec", &spec("mixedexp.json"), "--points", points, "--require-c"]);
    assert_eq!(code, 1);
    assert!(r["summary"]["orthonormality_drift"].as_f64().unwrap() < 1e-8);
    let out = run(&["lift", "--spec", &spec("separable.json"), "--points", "0,0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn planar_and_christoffel_reports() {
    assert_eq!(run(&["jets2d", "--spec", &spec("rotated30.json")]).status.code(), Some(0));
    assert_eq!(run(&["jets2d", "--spec", &spec("mixedexp.json")]).status.code(), Some(1));
    let (code, r) = json(&["christoffel", "--spec", &spec("mixedexp.json"), "--samples", "5"]);
    assert_eq!(code, 0);
    assert_eq!(r["rows"].as_array().unwrap().len(), 10);
    let (code, _) = json(&[
        "check-propi",
        "--spec",
        &spec("mixedexp.json"),
        "--domain",
        &spec("unit_square.json"),
        "--expect",
        "fails",
    ]);
    assert_eq!(code, 0);
}

#[test]
fn catalog_report() {
    let (code, r) = json(&["report-all", "--samples", "40"]);
    assert_eq!(code, 0);
    assert_eq!(r["rows"].as_array().unwrap().len(), 9);
}
