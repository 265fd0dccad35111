use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn cavity(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_cavity"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn run_config(
    dir: &Path,
    name: &str,
    text: &str,
    command: &str,
) -> (i32, String, std::path::PathBuf) {
    let cfg = dir.join(format!("{name}.toml"));
    std::fs::write(&cfg, text).unwrap();
    let out = dir.join(name);
    let (code, _, stderr) = cavity(&[
        command,
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    (code, stderr, out)
}

fn summary(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

fn energies(s: &Value) -> Vec<(f64, f64)> {
    s["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| {
            (
                p["t_motion"].as_f64().unwrap(),
                p["evals"][0]["energy"]["e_total"].as_f64().unwrap(),
            )
        })
        .collect()
}

const STATIC: &str = r#"
eval_times = [0.5, 2.0]
[trajectory]
kind = "static"
length = 2.0
[outputs]
energy = true
sum_rule = true
profile = { file = "profile.csv", samples = 33 }
spectrum = { file = "spectrum.csv" }
"#;

#[test]
fn static_run_reports_casimir_energy() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stderr, out) = run_config(dir.path(), "static", STATIC, "run");
    assert_eq!(code, 0, "{stderr}");
    let s = summary(&out);
    let want = -std::f64::consts::PI / (24.0 * 2.0);
    for e in s["points"][0]["evals"].as_array().unwrap() {
        let got = e["energy"]["e_total"].as_f64().unwrap();
        assert!((got - want).abs() < 1e-12, "{got}");
        assert!(e["sum_rule"]["rel_err"].as_f64().unwrap() < 1e-12);
    }
    assert!(s["points"][0]["max_moore_residual"].as_f64().unwrap() < 1e-12);
    assert_eq!(s["config_hash"].as_str().unwrap().len(), 64);

    let profile = std::fs::read_to_string(out.join("profile_t1.csv")).unwrap();
    let mut lines = profile.lines();
    assert_eq!(lines.next(), Some("tau,rho"));
    let rho_want = -std::f64::consts::PI / (48.0 * 4.0);
    let mut prev = f64::NEG_INFINITY;
    for line in lines {
        let mut cols = line.split(',').map(|c| c.parse::<f64>().unwrap());
        let (tau, rho) = (cols.next().unwrap(), cols.next().unwrap());
        assert!(tau > prev);
        prev = tau;
        assert!((rho - rho_want).abs() < 1e-15);
    }
    assert!(out.join("spectrum_t0.csv").exists());
}

#[test]
fn identical_configs_give_identical_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
eval_times = [1.0]
time_origin = "motion_end"
workers = 2
[trajectory]
kind = "law_wu"
delta_l = 0.031415926535897934
k_drive = 2
[sweep]
parameter = "periods"
values = [2, 3, 4]
[outputs]
energy = true
sum_rule = true
"#;
    let (c1, e1, o1) = run_config(dir.path(), "a", text, "sweep");
    let (c2, e2, o2) = run_config(dir.path(), "b", text, "sweep");
    assert_eq!((c1, c2), (0, 0), "{e1} {e2}");
    let s1 = std::fs::read(o1.join("summary.json")).unwrap();
    let s2 = std::fs::read(o2.join("summary.json")).unwrap();
    assert_eq!(s1, s2);
}

#[test]
fn sinusoidal_sweep_follows_cosh_growth() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
eval_times = [0.0]
time_origin = "motion_end"
[trajectory]
kind = "sinusoidal"
delta_l = 0.031415926535897934
k_drive = 2
[sweep]
parameter = "periods"
values = [10, 20, 30, 40, 50]
[outputs]
energy = true
"#;
    let (code, stderr, out) = run_config(dir.path(), "sin", text, "sweep");
    assert_eq!(code, 0, "{stderr}");
    // L = π, ω = 1, ω_2 ΔL/L = 0.02
    for (t, e) in energies(&summary(&out)) {
        let want = (-4.0 + 3.0 * (0.02 * t).cosh()) / 24.0;
        assert!(
            (e - want).abs() < 0.05 * want.abs(),
            "T = {t}: {e} vs {want}"
        );
    }
}

#[test]
fn law_wu_sweep_grows_quadratically() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
eval_times = [3.141592653589793]
time_origin = "motion_end"
[trajectory]
kind = "law_wu"
delta_l = 0.031415926535897934
k_drive = 2
[sweep]
parameter = "periods"
values = [5, 7, 10, 14, 20, 28, 40, 50]
[outputs]
energy = true
"#;
    let (code, stderr, out) = run_config(dir.path(), "lw", text, "sweep");
    assert_eq!(code, 0, "{stderr}");
    let pts: Vec<(f64, f64)> = energies(&summary(&out))
        .into_iter()
        .map(|(t, e)| (t.ln(), (e + 1.0 / 24.0).ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    assert!((slope - 2.0).abs() < 0.1, "{slope}");
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stderr, _) = run_config(dir.path(), "bad", "eval_times = [1.0]\n", "run");
    assert_eq!(code, 2);
    let diag: Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(diag["status"], "config_error");

    let empty_range = STATIC.replace("samples = 33", "samples = 33, range = [1.0, 1.0]");
    let (code, _, out) = run_config(dir.path(), "range", &empty_range, "run");
    assert_eq!(code, 2);
    assert!(!out.exists());

    let (code, _, _) = run_config(dir.path(), "nosweep", STATIC, "sweep");
    assert_eq!(code, 2);

    let (code, _, _) = cavity(&["validate", "--config", "/definitely/missing.toml"]);
    assert_eq!(code, 2);
}

#[test]
fn validate_does_not_write() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, out) = run_config(dir.path(), "v", STATIC, "validate");
    assert_eq!(code, 0);
    assert!(!out.exists());
}

#[test]
fn numerical_failures_exit_with_3_and_name_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
eval_times = [1.0]
[trajectory]
kind = "sinusoidal"
delta_l = 0.1
periods = 3
[tolerances]
moore = 1e-30
[outputs]
energy = true
"#;
    let (code, stderr, _) = run_config(dir.path(), "tight", text, "run");
    assert_eq!(code, 3);
    let diag: Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(diag["status"], "numerical_error");
    assert_eq!(diag["stage"], "solve_phase");
}

#[test]
fn symmetry_check_reports_invariance() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
eval_times = [0.0]
time_origin = "motion_end"
seed_moebius = [1.2, 0.3, -0.4, 0.9]
[trajectory]
kind = "law_wu"
delta_l = 0.031415926535897934
k_drive = 2
periods = 6
[tolerances]
out_modes = 8
[outputs]
symmetry_check = true
spectrum = { file = "n.csv", beta_file = "beta.csv" }
"#;
    let (code, stderr, out) = run_config(dir.path(), "sym", text, "run");
    assert_eq!(code, 0, "{stderr}");
    let s = summary(&out);
    let sym = &s["points"][0]["evals"][0]["symmetry"];
    assert!(sym["energy_rel_diff"].as_f64().unwrap() < 1e-10);
    assert!(sym["n_k_max_rel_diff"].as_f64().unwrap() < 1e-6);
    let beta = std::fs::read_to_string(out.join("beta.csv")).unwrap();
    assert_eq!(beta.lines().next(), Some("k,l,re,im"));
    let n = std::fs::read_to_string(out.join("n.csv")).unwrap();
    assert_eq!(n.lines().count(), 9);
}
