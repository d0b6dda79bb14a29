use std::path::Path;
use std::process::{Command, Output};

use brequant::io::QuantizerFile;

fn brequant(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_brequant")).args(args).output().unwrap()
}

fn design(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["design", "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    brequant(&args)
}

fn eval(file: &Path, prior: &str) -> serde_json::Value {
    let out = brequant(&["eval", "--quantizer", file.to_str().unwrap(), "--prior", prior]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn load(dir: &Path) -> QuantizerFile {
    QuantizerFile::from_json(&std::fs::read_to_string(dir.join("quantizer.json")).unwrap()).unwrap()
}

#[test]
fn gaussian_design_writes_schema_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = design(
        dir.path(),
        &["--model", "gaussian", "--mu", "1", "--sigma2", "1", "--c10", "1", "--c01", "1", "--K", "4"],
    );
    assert_eq!(out.status.code(), Some(0));
    let f = load(dir.path());
    assert_eq!((f.m, f.k, f.weights.len()), (2, 4, 4));
    assert_eq!(f.boundaries.as_ref().unwrap().len(), 3);
    assert!(f.cells.is_none() && f.converged);
    let raw: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("quantizer.json")).unwrap()).unwrap();
    for key in ["model", "M", "K", "weights", "boundaries", "max_divergence", "converged", "iterations", "tool_version"]
    {
        assert!(raw.get(key).is_some(), "{key}");
    }
    let r = eval(&dir.path().join("quantizer.json"), "0.3");
    assert!((r["max_divergence"].as_f64().unwrap() - f.max_divergence).abs() <= 1e-12);
    let curve = std::fs::read_to_string(dir.path().join("risk_curve.csv")).unwrap();
    assert!(curve.starts_with("p,J,J_quantized,divergence\n"));
    assert_eq!(curve.lines().count(), 1002);
}

#[test]
fn eval_reports_cell_weight_and_divergence() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(design(dir.path(), &["--model", "gaussian", "--K", "2"]).status.code(), Some(0));
    let file = dir.path().join("quantizer.json");
    let r = eval(&file, "0.3");
    assert_eq!(r["cell"], 0);
    assert!((r["weight"][0].as_f64().unwrap() - 0.272).abs() < 1e-3);
    assert!(r["divergence"].as_f64().unwrap() >= 0.0);
    let a = load(dir.path()).weights[1][0];
    let r = eval(&file, &format!("{a}"));
    assert_eq!(r["cell"], 1);
    assert_eq!(r["divergence"].as_f64().unwrap(), 0.0);
}

#[test]
fn ternary_design_has_seven_cells_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = design(dir.path(), &["--model", "exponential", "--lambda", "5,4,3", "--K", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let f = load(dir.path());
    assert_eq!((f.m, f.k), (3, 7));
    let cells = f.cells.as_ref().unwrap();
    assert_eq!(cells.len(), 7);
    assert!(cells.iter().all(|c| c.vertices.len() >= 3));
    let r = eval(&dir.path().join("quantizer.json"), "0.2,0.3,0.5");
    assert!((r["max_divergence"].as_f64().unwrap() - f.max_divergence).abs() <= 1e-12);
    let curve = std::fs::read_to_string(dir.path().join("risk_curve.csv")).unwrap();
    assert!(curve.starts_with("p0,p1,J,J_quantized,divergence\n"));
    assert_eq!(curve.lines().count(), 1 + 201 * 202 / 2);
}

#[test]
fn outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--model", "exponential", "--K", "4", "--multistart", "3", "--seed", "5"];
    design(a.path(), &args);
    design(b.path(), &args);
    for name in ["quantizer.json", "risk_curve.csv"] {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(design(dir.path(), &["--model", "gaussian", "--K", "0"]).status.code(), Some(2));
    assert_eq!(design(dir.path(), &["--model", "gaussian", "--mu", "0", "--K", "2"]).status.code(), Some(2));
    assert_eq!(design(dir.path(), &["--model", "laplace", "--K", "2"]).status.code(), Some(2));
    assert_eq!(brequant(&["sweep", "--model", "gaussian", "--K-range", "5..2"]).status.code(), Some(2));
    std::fs::write(dir.path().join("bad.json"), "{\"M\": 2}").unwrap();
    let bad = dir.path().join("bad.json");
    assert_eq!(brequant(&["eval", "--quantizer", bad.to_str().unwrap(), "--prior", "0.3"]).status.code(), Some(2));
}

#[test]
fn non_convergence_exits_with_three_and_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    let out =
        design(dir.path(), &["--model", "gaussian", "--c10", "10", "--K", "12", "--max-iter", "2", "--tol", "1e-15"]);
    assert_eq!(out.status.code(), Some(3));
    let f = load(dir.path());
    assert!(!f.converged);
    assert!(dir.path().join("risk_curve.csv").exists());
}

#[test]
fn sweep_with_one_entry_has_no_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out = brequant(&["sweep", "--model", "gaussian", "--K-range", "3..3", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "K,D,logK,logD,converged");
    assert_eq!(csv.lines().count(), 2);
    let fit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sweep_fit.json")).unwrap()).unwrap();
    assert_eq!(fit["reason"], "insufficient-data");
    assert!(fit.get("slope_fit").is_none());
}

#[test]
fn binary_sweep_slope_is_near_minus_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = brequant(&["sweep", "--model", "gaussian", "--K-range", "1..64", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let fit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sweep_fit.json")).unwrap()).unwrap();
    let slope = fit["slope_fit"]["slope"].as_f64().unwrap();
    assert!((slope + 2.0).abs() < 0.2, "{slope}");
}

#[test]
fn staircase_has_eleven_nondecreasing_levels() {
    let dir = tempfile::tempdir().unwrap();
    let out = brequant(&["staircase", "--model", "gaussian", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(dir.path().join("staircase.csv")).unwrap();
    let q: Vec<f64> = rdr.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
    assert_eq!(q.len(), 1001);
    assert!(q.windows(2).all(|w| w[0] <= w[1]));
    let mut levels = q.clone();
    levels.dedup();
    assert_eq!(levels.len(), 11);
}
