use std::path::Path;
use std::process::{Command, Output};

fn perevo(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perevo"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("PEREVO_OUT")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

const FULL_WEIGHT: &str = "[grid]\nx_lo = 0\nx_hi = 1\nn = 8\n[time]\nT = 1\nM = 8\n\
                           [coefficients]\nD = 1\n[boundary]\nbc = dirichlet\n[weight]\nweight = 1\n";

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.cfg");
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn eigen_heat_baseline_writes_outputs() {
    let d = tempfile::tempdir().unwrap();
    let o = perevo(&["eigen", "heat_baseline", "--lambda", "0"], d.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&read(d.path(), "eigen.json")).unwrap();
    for key in ["lambda", "r", "mu", "residual", "eigengap", "iterations", "trivial_limit"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    // implicit Euler value of pi^2 at n = 64, M = 256
    let h = 1.0 / 65.0;
    let l1 = 4.0 / (h * h) * (std::f64::consts::PI * h / 2.0).sin().powi(2);
    let expected = 256.0 * (1.0 + l1 / 256.0).ln();
    assert!((v["mu"].as_f64().unwrap() - expected).abs() < 1e-9 * expected);
    let csv = read(d.path(), "eigenfunction.csv");
    assert!(csv.starts_with("t,x,u\n"));
    assert_eq!(csv.lines().count(), 1 + 64 * 257);
    let m: serde_json::Value = serde_json::from_str(&read(d.path(), "manifest.json")).unwrap();
    assert_eq!(m["command"], "eigen");
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn malformed_config_names_the_key() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "[grid]\nx_lo = 0\nx_hi = 1\nnodes = 5\n");
    let o = perevo(&["eigen", "--config", &cfg], d.path());
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("nodes") && err.contains("line 4"), "{err}");
}

#[test]
fn usage_errors_exit_two() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&perevo(&["eigen"], d.path())), 2);
    assert_eq!(code(&perevo(&["eigen", "no_such_scenario"], d.path())), 2);
    assert_eq!(code(&perevo(&["kernel", "heat_baseline", "--s", "0.5", "--t", "0.25"], d.path())), 2);
    assert_eq!(code(&perevo(&["kernel", "heat_baseline", "--s", "0.5", "--t", "0.5"], d.path())), 2);
    assert_eq!(code(&perevo(&["sweep", "du_peng", "--lambdas", "10,1"], d.path())), 2);
    assert_eq!(code(&perevo(&["sweep", "du_peng", "--lambdas", "1:10:10"], d.path())), 2);
}

#[test]
fn trivial_period_map_exits_three() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), FULL_WEIGHT);
    let o = perevo(&["eigen", "--config", &cfg, "--lambda", "1e100"], d.path());
    assert_eq!(code(&o), 3);
    let v: serde_json::Value = serde_json::from_str(&read(d.path(), "eigen.json")).unwrap();
    assert_eq!(v["trivial_limit"], true);
    assert!(v["mu"].is_null());
}

#[test]
fn counterexample_eigen_is_finite_but_large() {
    let d = tempfile::tempdir().unwrap();
    let o = perevo(&["eigen", "counterexample", "--lambda", "1e6"], d.path());
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&read(d.path(), "eigen.json")).unwrap();
    assert!(v["mu"].as_f64().unwrap() > 100.0);
}

#[test]
fn check_exit_codes() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&perevo(&["check", "du_peng"], d.path())), 0);
    assert_eq!(code(&perevo(&["check", "counterexample"], d.path())), 6);
    let v: serde_json::Value = serde_json::from_str(&read(d.path(), "admissibility.json")).unwrap();
    assert!(v["failing_pair"].is_array());
    let cfg = write_config(d.path(), FULL_WEIGHT);
    assert_eq!(code(&perevo(&["check", "--config", &cfg], d.path())), 7);
}

#[test]
fn mask_matches_golden_file() {
    let d = tempfile::tempdir().unwrap();
    let o = perevo(&["check", "du_peng", "--n", "12", "--steps", "8"], d.path());
    assert_eq!(code(&o), 0);
    let golden = include_str!("golden/du_peng_n12_m8_mask.txt");
    assert_eq!(read(d.path(), "mask.txt"), golden);
}

#[test]
fn sweep_outputs() {
    let d = tempfile::tempdir().unwrap();
    let o = perevo(&["sweep", "du_peng", "--n", "16", "--steps", "64", "--lambdas", "0,1e0:1e3:x10"], d.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(d.path(), "sweep.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "lambda,r,mu,residual,s_eps_mass,dist_to_limit_L2,trivial");
    let mus: Vec<f64> = lines.map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(mus.len(), 5);
    assert!(mus.windows(2).all(|w| w[1] > w[0]));
    let dists: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(5).unwrap().parse().unwrap()).collect();
    assert!(dists.windows(2).all(|w| w[1] < w[0]), "{dists:?}");
    assert!(read(d.path(), "mu.dat").starts_with("# lambda mu\n"));
    assert!(read(d.path(), "s_eps_mass.dat").starts_with("# lambda s_eps_mass\n"));
    let v: serde_json::Value = serde_json::from_str(&read(d.path(), "convergence.json")).unwrap();
    assert_eq!(v["trivial"], false);
}

#[test]
fn counterexample_sweep_reports_trivial() {
    let d = tempfile::tempdir().unwrap();
    let o = perevo(&["sweep", "counterexample"], d.path());
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&read(d.path(), "convergence.json")).unwrap();
    assert_eq!(v["trivial"], true);
    assert_eq!(v["divergent"], true);
}

#[test]
fn zero_weight_sweep_is_constant() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&perevo(&["sweep", "heat_baseline", "--n", "16", "--steps", "32"], d.path())), 0);
    let csv = read(d.path(), "sweep.csv");
    let mus: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert!(mus.iter().all(|m| *m == mus[0]));
}

#[test]
fn kernel_peak_and_fit() {
    let d = tempfile::tempdir().unwrap();
    let o = perevo(&["kernel", "heat_baseline", "--t", "0.05", "--n", "99", "--steps", "2000"], d.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&read(d.path(), "gaussian_fit.json")).unwrap();
    let peak = v["peak"].as_f64().unwrap();
    assert!((peak - 1.2616).abs() < 0.03 * 1.2616);
    assert!(v["max_violation"].as_f64().unwrap() <= 0.0);
    assert!(v["Mconst"].as_f64().unwrap() >= 1.0);
    let csv = read(d.path(), "kernel.csv");
    assert!(csv.starts_with("x,y,k\n"));
    assert_eq!(csv.lines().count(), 1 + 99 * 99);
}

#[test]
fn penalized_kernel_is_dominated() {
    let d = tempfile::tempdir().unwrap();
    let o = perevo(&["kernel", "du_peng", "--lambda", "1e3", "--s", "0.25", "--t", "0.75", "--n", "32", "--steps", "64"], d.path());
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&read(d.path(), "gaussian_fit.json")).unwrap();
    assert_eq!(v["monotone_violation"].as_f64().unwrap(), 0.0);
}

#[test]
fn identical_runs_are_byte_identical() {
    let runs: Vec<_> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for (k, r) in runs.iter().enumerate() {
        let threads = if k == 0 { "1" } else { "3" };
        let args = ["sweep", "du_peng", "--n", "16", "--steps", "32", "--lambdas", "0,1e0:1e2:x10", "--threads", threads];
        assert_eq!(code(&perevo(&args, r.path())), 0);
        assert_eq!(code(&perevo(&["eigen", "du_peng", "--n", "16", "--steps", "32", "--lambda", "5"], r.path())), 0);
    }
    for name in ["sweep.csv", "convergence.json", "mu.dat", "s_eps_mass.dat", "eigen.json", "eigenfunction.csv"] {
        assert_eq!(read(runs[0].path(), name), read(runs[1].path(), name), "{name}");
    }
    let digest = |p: &Path| -> String {
        let v: serde_json::Value = serde_json::from_str(&read(p, "manifest.json")).unwrap();
        v["digest"].as_str().unwrap().to_string()
    };
    assert_eq!(digest(runs[0].path()), digest(runs[1].path()));
}

#[test]
fn env_var_overrides_out_flag() {
    let flag = tempfile::tempdir().unwrap();
    let env = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_perevo"))
        .args(["check", "du_peng", "--n", "8", "--steps", "8", "--out"])
        .arg(flag.path())
        .env("PEREVO_OUT", env.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(env.path().join("mask.txt").exists());
    assert!(!flag.path().join("mask.txt").exists());
}

#[test]
fn demo_runs_everything() {
    let d = tempfile::tempdir().unwrap();
    let o = perevo(&["demo", "du_peng", "--n", "16", "--steps", "32"], d.path());
    assert_eq!(code(&o), 0);
    for name in ["eigen.json", "sweep.csv", "convergence.json", "admissibility.json", "mask.txt", "manifest.json"] {
        assert!(d.path().join(name).exists(), "{name}");
    }
}
