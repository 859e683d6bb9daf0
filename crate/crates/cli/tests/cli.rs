use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn gammadiv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gammadiv"))
        .args(args)
        .env_remove("GAMMADIV_MAX_ITER")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}); stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn atoms(points: &[f64], weights: &[f64]) -> String {
    let pts: Vec<Vec<f64>> = points.iter().map(|x| vec![*x]).collect();
    serde_json::json!({ "points": pts, "weights": weights }).to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn identical_measures_have_zero_divergence() {
    let dir = TempDir::new().unwrap();
    let a = write(dir.path(), "a.json", &atoms(&[0.0, 1.0, 2.5], &[0.2, 0.5, 0.3]));
    let b = write(dir.path(), "b.json", &atoms(&[0.0, 1.0, 2.5], &[0.2, 0.5, 0.3]));
    let out = gammadiv(&["divergence", "--mu", s(&a), "--nu", s(&b)]);
    assert!(out.status.success());
    let v = json(&out)["primal"]["report"]["value"].as_f64().unwrap();
    assert!(v.abs() <= 1e-9, "{v}");
}

#[test]
fn both_modes_agree_within_the_tolerance() {
    let dir = TempDir::new().unwrap();
    let a = write(dir.path(), "a.json", &atoms(&[0.0, 1.0, 2.0], &[0.2, 0.5, 0.3]));
    let b = write(dir.path(), "b.json", &atoms(&[0.0, 1.0, 3.0], &[0.3, 0.3, 0.4]));
    let out = gammadiv(&["divergence", "--mu", s(&a), "--nu", s(&b), "--cost", "scaled:1", "--mode", "both", "--tol", "1e-7"]);
    assert!(out.status.success());
    let report = json(&out);
    assert_eq!(report["status"], "converged");
    assert!(report["mode_difference"].as_f64().unwrap() <= 1e-7);
    assert!(report["primal"]["report"]["primal_dual_gap"].as_f64().unwrap() <= 1e-7);
    assert_eq!(report["tolerances"]["gd_tol"].as_f64(), Some(1e-7));
}

#[test]
fn a_large_scale_approaches_relative_entropy() {
    let dir = TempDir::new().unwrap();
    let (p, q) = ([0.1, 0.6, 0.3], [0.3, 0.3, 0.4]);
    let a = write(dir.path(), "a.json", &atoms(&[0.0, 1.0, 3.0], &p));
    let b = write(dir.path(), "b.json", &atoms(&[0.0, 1.0, 3.0], &q));
    let kl: f64 = p.iter().zip(&q).map(|(x, y)| x * (x / y).ln()).sum();
    let out = gammadiv(&["divergence", "--mu", s(&a), "--nu", s(&b), "--scale", "1000"]);
    assert!(out.status.success());
    let v = json(&out)["primal"]["report"]["value"].as_f64().unwrap();
    assert!((v - kl).abs() <= 1e-6, "{v} vs {kl}");
}

#[test]
fn csv_output_has_the_documented_columns() {
    let dir = TempDir::new().unwrap();
    let a = write(dir.path(), "a.json", &atoms(&[0.0, 1.0], &[0.5, 0.5]));
    let b = write(dir.path(), "b.json", &atoms(&[0.0, 2.0], &[0.5, 0.5]));
    let out = gammadiv(&["divergence", "--mu", s(&a), "--nu", s(&b), "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x0,g_star,gamma_star,mu,nu"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn malformed_json_exits_one_with_a_position() {
    let dir = TempDir::new().unwrap();
    let a = write(dir.path(), "a.json", "{\n  \"points\": [[0.0]],\n  \"weights\": [1.0,]\n}");
    let b = write(dir.path(), "b.json", &atoms(&[0.0], &[1.0]));
    let out = gammadiv(&["divergence", "--mu", s(&a), "--nu", s(&b)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("column 19"), "{err}");
}

#[test]
fn an_iteration_cap_gives_exit_two_and_still_writes_the_report() {
    let dir = TempDir::new().unwrap();
    let a = write(dir.path(), "a.json", &atoms(&[0.0, 1.0, 2.0, 4.0], &[0.1, 0.4, 0.3, 0.2]));
    let b = write(dir.path(), "b.json", &atoms(&[0.5, 1.5, 3.0], &[0.3, 0.3, 0.4]));
    let report = dir.path().join("report.json");
    let out = Command::new(env!("CARGO_BIN_EXE_gammadiv"))
        .args(["divergence", "--mu", s(&a), "--nu", s(&b), "--out", s(&report)])
        .env("GAMMADIV_MAX_ITER", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["status"], "non_convergence");
    assert_eq!(doc["tolerances"]["max_iter"], 1);
    assert_eq!(doc["primal"]["converged"], false);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let a = write(dir.path(), "a.json", &atoms(&[0.0, 1.0, 2.0], &[0.2, 0.5, 0.3]));
    let b = write(dir.path(), "b.json", &atoms(&[0.0, 1.0, 3.0], &[0.3, 0.3, 0.4]));
    let run = || gammadiv(&["divergence", "--mu", s(&a), "--nu", s(&b), "--mode", "both"]).stdout;
    assert_eq!(run(), run());
    let sim = || {
        gammadiv(&["uq", "diffusion", "--a", "1", "--sigma", "1", "--u", "0.2", "--v", "1.1", "--simulate", "--seed", "3", "--steps", "20000", "--burn-in", "1000"]).stdout
    };
    assert_eq!(sim(), sim());
}

#[test]
fn uniform_stretch_example_matches_the_closed_form() {
    let out = gammadiv(&["example", "uniform-stretch", "--c", "0.1"]);
    assert!(out.status.success());
    let r = json(&out);
    let c: f64 = 0.1;
    let b = r["closed_form"]["b"].as_f64().unwrap();
    let expected = (1.0 / (1.0 + c)).ln() + (1.0 + c - b).powi(2) / (2.0 * (1.0 + c));
    assert!((r["closed_form"]["value"].as_f64().unwrap() - expected).abs() <= 1e-12);
    assert!(r["residuals"]["value"].as_f64().unwrap() <= 5e-3);
}

#[test]
fn narrow_gaussian_example_is_tagged() {
    let out = gammadiv(&["example", "gaussian", "--s1", "0.3", "--s2", "1", "--k", "1"]);
    assert!(out.status.success());
    let r = json(&out);
    assert_eq!(r["closed_form"]["divergence"]["case"], "narrow");
    assert!(r["closed_form"]["kl"].as_f64().unwrap() > r["closed_form"]["divergence"]["value"].as_f64().unwrap());
}

#[test]
fn point_set_examples_cross_check() {
    let dir = TempDir::new().unwrap();
    let pts = write(dir.path(), "pts.json", "[[0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [3.0, 1.0]]");
    for args in [
        vec!["example", "add-point", "--points", s(&pts), "--y", "0.5,0.5"],
        vec!["example", "remove-point", "--points", s(&pts), "--j", "1"],
    ] {
        let out = gammadiv(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(json(&out)["residuals"]["value"].as_f64().unwrap() <= 1e-6);
    }
}

#[test]
fn unknown_example_exits_one() {
    assert_eq!(gammadiv(&["example", "no-such-example"]).status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let out = gammadiv(&["uq", "static", "--help"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("c, upper, lower"));
}

#[test]
fn unperturbed_diffusion_bound_is_tight() {
    let out = gammadiv(&["uq", "diffusion", "--a", "1", "--sigma", "1", "--u", "0", "--v", "1"]);
    assert!(out.status.success());
    let r = json(&out);
    assert!((r["acut"]["bound"].as_f64().unwrap() - 0.5).abs() <= 1e-4);
    assert!(r["margin"].as_f64().unwrap().abs() <= 1e-4);
}

#[test]
fn simulated_moment_lies_below_the_bound() {
    let out = gammadiv(&["uq", "diffusion", "--a", "1", "--sigma", "1", "--u", "0.2", "--v", "1.1", "--simulate", "--seed", "7"]);
    assert!(out.status.success());
    let r = json(&out);
    let est = r["acut"]["empirical_moment"]["estimate"].as_f64().unwrap();
    assert!(est <= r["acut"]["bound"].as_f64().unwrap());
    assert!(r["empirical_margin"].as_f64().unwrap() >= 0.0);
}

#[test]
fn simulate_without_seed_exits_one() {
    let out = gammadiv(&["uq", "diffusion", "--a", "1", "--sigma", "1", "--simulate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn two_point_sensitivity_bound_equals_t() {
    let dir = TempDir::new().unwrap();
    let t = 0.7;
    let doc = serde_json::json!({ "points": [[0.0], [1.0]], "p": [0.5, 0.5], "p_prime": [-t, t], "f": [0.0, 1.0] });
    let path = write(dir.path(), "sens.json", &doc.to_string());
    let out = gammadiv(&["uq", "static", "--sensitivity", s(&path)]);
    assert!(out.status.success());
    let bound = json(&out)["sensitivity"]["bound"].as_f64().unwrap();
    assert!((bound - t).abs() <= 1e-12, "{bound}");
}

#[test]
fn static_bounds_enclose_the_true_difference() {
    let dir = TempDir::new().unwrap();
    let mu = write(dir.path(), "mu.json", &atoms(&[0.0, 1.0, 2.0], &[0.2, 0.3, 0.5]));
    let nu = write(dir.path(), "nu.json", &atoms(&[0.0, 1.0, 2.0], &[0.4, 0.4, 0.2]));
    let f = write(dir.path(), "f.json", r#"{"points": [[0.0], [1.0], [2.0]], "values": [0.0, 0.5, 1.2]}"#);
    let out = gammadiv(&["uq", "static", "--mu", s(&mu), "--nu", s(&nu), "--observable", s(&f)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    let truth = (0.2 * 0.0 + 0.3 * 0.5 + 0.5 * 1.2) - (0.4 * 0.0 + 0.4 * 0.5 + 0.2 * 1.2);
    assert!(r["bounds"]["upper"].as_f64().unwrap() >= truth - 1e-9);
    assert!(r["bounds"]["lower"].as_f64().unwrap() <= truth + 1e-9);
    assert!(r["linearized"].is_object());
}
