use std::path::Path;
use std::process::{Command, Output};

use lambertw_cli::ingest::{ingest_csv, Column};

fn lambertw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lambertw")).args(args).output().expect("binary runs")
}

fn simulate(dir: &Path, name: &str, args: &[&str]) -> String {
    let path = dir.join(name);
    let p = path.to_str().unwrap().to_string();
    let mut all = vec!["simulate"];
    all.extend_from_slice(args);
    all.extend(["--output", &p]);
    let out = lambertw(&all);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    p
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn estimate(report: &serde_json::Value, name: &str) -> f64 {
    report["parameters"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["name"] == name)
        .unwrap_or_else(|| panic!("no parameter {name}"))["estimate"]
        .as_f64()
        .unwrap()
}

#[test]
fn simulate_then_fit_recovers_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let y = simulate(dir.path(), "y.csv", &["--n", "4000", "--gamma", "0.15", "--c", "1", "--s", "2"]);
    let r = json(&lambertw(&["fit", &y]));
    assert_eq!(r["method"], "igmm");
    assert_eq!(r["n"], 4000);
    assert_eq!(r["converged"], true);
    assert!((estimate(&r, "gamma") - 0.15).abs() < 0.05);
    assert!((estimate(&r, "mu_x") - 1.0).abs() < 0.15);
    assert!((estimate(&r, "sigma_x") - 2.0).abs() < 0.15);
}

#[test]
fn mle_report_has_standard_errors() {
    let dir = tempfile::tempdir().unwrap();
    let y = simulate(dir.path(), "y.csv", &["--n", "2000", "--family", "student_t", "--nu", "6", "--gamma", "-0.1"]);
    let r = json(&lambertw(&["fit", &y, "--method", "mle", "--family", "student_t"]));
    let names: Vec<&str> = r["parameters"].as_array().unwrap().iter().map(|p| p["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["c", "s", "nu", "gamma"]);
    for p in r["parameters"].as_array().unwrap() {
        assert!(p["std_error"].as_f64().unwrap() > 0.0);
    }
    assert!(r["loglik"].as_f64().unwrap().is_finite());
    assert!((estimate(&r, "gamma") + 0.1).abs() < 0.06);
}

#[test]
fn gaussianize_round_trips_and_leaves_gaussian_data_alone() {
    let dir = tempfile::tempdir().unwrap();
    let y = simulate(dir.path(), "y.csv", &["--n", "3000", "--c", "5", "--s", "2"]);
    let x = dir.path().join("x.csv");
    let rep = dir.path().join("r.json");
    let out = lambertw(&[
        "gaussianize",
        &y,
        "--type",
        "h",
        "--output",
        x.to_str().unwrap(),
        "--report",
        rep.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r: serde_json::Value = serde_json::from_slice(&std::fs::read(&rep).unwrap()).unwrap();
    assert_eq!(r["round_trip_ok"], true);
    assert!(estimate(&r, "delta") < 0.05);
    let before = ingest_csv(Path::new(&y), &Column::Index(0), false).unwrap().values;
    let after = ingest_csv(&x, &Column::Name("x".into()), true).unwrap().values;
    assert_eq!(before.len(), after.len());
    let (m, s) = (estimate(&r, "mu_x"), estimate(&r, "sigma_x"));
    for (a, b) in before.iter().zip(&after) {
        assert!(((a - m) / s - (b - m) / s).abs() < 0.2, "{a} -> {b}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(lambertw(&["--version"]).status.code(), Some(0));
    assert_eq!(lambertw(&["fit"]).status.code(), Some(1));
    assert_eq!(lambertw(&["fit", "/nonexistent/file.csv"]).status.code(), Some(1));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "1\n2\nabc\n").unwrap();
    let out = lambertw(&["fit", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let y = simulate(dir.path(), "c.csv", &["--n", "500", "--family", "cauchy", "--variant", "location-scale"]);
    let out = lambertw(&["fit", &y, "--method", "mle", "--family", "cauchy"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(lambertw(&["fit", &y, "--method", "mle", "--family", "cauchy", "--variant", "location-scale"]).status.code(), Some(0));

    let y = simulate(dir.path(), "t.csv", &["--n", "2000", "--gamma", "0.2"]);
    assert_eq!(lambertw(&["fit", &y, "--max-iter", "1"]).status.code(), Some(0));
    assert_eq!(lambertw(&["fit", &y, "--max-iter", "1", "--strict"]).status.code(), Some(3));
    assert_eq!(lambertw(&["fit", &y, "--tol", "-1"]).status.code(), Some(1));
}

#[test]
fn tables_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    let y = simulate(dir.path(), "y.csv", &["--n", "800", "--family", "student_t", "--nu", "4"]);

    let out = lambertw(&["hill", "--input", &y, "--k-grid", "10,20,40"]);
    assert!(out.status.success());
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(r.headers().unwrap(), vec!["label", "side", "k", "alpha_hat", "replicate"]);
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|row| row[3].parse::<f64>().unwrap() > 0.0));

    let out = lambertw(&["whiteness", &y, "--max-lag", "5", "--replicates", "100", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 6);
    assert_eq!(v[0]["rho"], 1.0);
    assert!(v[5]["ljung_box_p"].as_f64().unwrap() > 0.0);

    let trace = dir.path().join("trace.csv");
    let out = lambertw(&["bootstrap", &y, "--n-grid", "100,400", "--replicates", "10", "--trace-output", trace.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sd: Vec<csv::StringRecord> = csv::Reader::from_reader(out.stdout.as_slice()).records().map(Result::unwrap).collect();
    assert_eq!(sd.len(), 6);
    let t: Vec<csv::StringRecord> = csv::Reader::from_path(&trace).unwrap().records().map(Result::unwrap).collect();
    assert_eq!(t.len(), 3 * 2 * 10);
}

#[test]
fn seeds_control_output() {
    let a = lambertw(&["simulate", "--n", "50", "--seed", "7"]).stdout;
    let b = lambertw(&["simulate", "--n", "50", "--seed", "7"]).stdout;
    let c = lambertw(&["simulate", "--n", "50", "--seed", "8"]).stdout;
    assert_eq!(a, b);
    assert_ne!(a, c);
}
