use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fdreg_cli::config::RunConfig;

fn fdreg(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdreg"))
        .args(args)
        .current_dir(dir)
        .env_remove("FDREG_THREADS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p
}

fn run_ok(dir: &Path, cmd: &str, config: &str, out: &str) {
    let o = fdreg(&[cmd, "--config", config, "--out", out], dir);
    assert!(o.status.success(), "{cmd} failed: {}", String::from_utf8_lossy(&o.stderr));
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

const SIMULATE: &str = r#"{"seed": 5, "grid_intervals": 16,
  "simulate": {"process": {"type": "smooth_fourier", "modes": 8, "decay": 1.0},
               "regression": {"eta": {"type": "integral_mean"}, "noise_sd": 0.1}, "n": 10}}"#;

#[test]
fn simulate_writes_grid_plus_curves() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "sim.json", SIMULATE);
    run_ok(dir.path(), "simulate", "sim.json", "a");
    let curves = csv_rows(&dir.path().join("a/curves.csv"));
    assert_eq!(curves.len(), 11);
    assert!(curves.iter().all(|r| r.len() == 17));
    assert_eq!(csv_rows(&dir.path().join("a/responses.csv")).len(), 10);

    run_ok(dir.path(), "simulate", "sim.json", "b");
    for f in ["curves.csv", "responses.csv", "manifest.json"] {
        assert_eq!(
            fs::read(dir.path().join("a").join(f)).unwrap(),
            fs::read(dir.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn manifest_echoes_a_reloadable_config() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "sim.json", SIMULATE);
    run_ok(dir.path(), "simulate", "sim.json", "a");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest["outputs"], serde_json::json!(["curves.csv", "responses.csv"]));
    let echoed = RunConfig::from_json(&manifest["config"].to_string()).unwrap();
    let original = RunConfig::from_json(SIMULATE).unwrap();
    assert_eq!(echoed.normalized_json(), original.normalized_json());
}

#[test]
fn seed_flag_and_thread_env_are_honored() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "sim.json", SIMULATE);
    run_ok(dir.path(), "simulate", "sim.json", "a");
    let o = fdreg(&["simulate", "--config", "sim.json", "--out", "b", "--seed", "6"], dir.path());
    assert!(o.status.success());
    assert_ne!(
        fs::read(dir.path().join("a/responses.csv")).unwrap(),
        fs::read(dir.path().join("b/responses.csv")).unwrap()
    );
    let o = Command::new(env!("CARGO_BIN_EXE_fdreg"))
        .args(["simulate", "--config", "sim.json", "--out", "c"])
        .env("FDREG_THREADS", "2")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(
        fs::read(dir.path().join("a/curves.csv")).unwrap(),
        fs::read(dir.path().join("c/curves.csv")).unwrap()
    );
}

#[test]
fn unwritable_output_fails_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "sim.json", SIMULATE);
    fs::write(dir.path().join("blocker"), "").unwrap();
    let o = fdreg(&["simulate", "--config", "sim.json", "--out", "blocker/sub"], dir.path());
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("blocker/sub"), "{err}");
}

/// Curves pinned at both ends: Σ c_k sin(kπt).
fn pinned_curves(n: usize, intervals: usize, seed: u64) -> String {
    let mut s = seed;
    let mut next = || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (s >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    let grid: Vec<f64> = (0..=intervals).map(|j| j as f64 / intervals as f64).collect();
    let mut out = String::new();
    let row = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",") + "\n";
    out.push_str(&row(&grid));
    for _ in 0..n {
        let c: Vec<f64> = (1..=6).map(|k| next() / (k * k) as f64).collect();
        let v: Vec<f64> = grid
            .iter()
            .map(|&t| c.iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * PI * t).sin()).sum())
            .collect();
        out.push_str(&row(&v));
    }
    out
}

fn fit_config(estimator: &str) -> String {
    format!(
        r#"{{"seed": 1, "fit": {{"train_curves": "x.csv", "train_responses": "y.csv", "queries": "q.csv",
           "estimator": {estimator}}}}}"#
    )
}

fn predictions(path: &Path) -> Vec<f64> {
    csv_rows(path)[1..].iter().map(|r| r[1].parse().unwrap()).collect()
}

#[test]
fn discretized_at_reference_resolution_matches_full() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("x.csv"), pinned_curves(40, 256, 1)).unwrap();
    fs::write(d.join("q.csv"), pinned_curves(15, 256, 2)).unwrap();
    let ys: String = (0..40).map(|i| format!("{}\n", (i as f64 * 0.7).sin())).collect();
    fs::write(d.join("y.csv"), ys).unwrap();
    write_config(d, "full.json", &fit_config(r#"{"type": "full"}"#));
    write_config(
        d,
        "disc.json",
        &fit_config(r#"{"type": "discretized", "pseudometric": {"variant": "discretize", "p": 256}, "c_np": 0.0}"#),
    );
    run_ok(d, "fit", "full.json", "full");
    run_ok(d, "fit", "disc.json", "disc");
    let a = predictions(&d.join("full/predictions.csv"));
    let b = predictions(&d.join("disc/predictions.csv"));
    assert_eq!(a.len(), 15);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
    }
    let manifest = fs::read_to_string(d.join("disc/manifest.json")).unwrap();
    assert!(manifest.contains("\"h_np\"") && manifest.contains("\"C\""));
}

#[test]
fn single_pair_knn_and_empty_queries() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("x.csv"), "0,0.5,1\n0.1,0.2,0.3\n").unwrap();
    fs::write(d.join("y.csv"), "4.25\n").unwrap();
    fs::write(d.join("q.csv"), "0,0.5,1\n0.1,0.2,0.3\n").unwrap();
    write_config(d, "knn.json", &fit_config(r#"{"type": "knn", "k": 1}"#));
    run_ok(d, "fit", "knn.json", "one");
    let rows = csv_rows(&d.join("one/predictions.csv"));
    assert_eq!(rows[0], ["query_index", "prediction", "effective_neighbors", "h_used"]);
    assert_eq!(rows[1][1], "4.25");

    fs::write(d.join("q.csv"), "").unwrap();
    run_ok(d, "fit", "knn.json", "empty");
    assert_eq!(
        fs::read_to_string(d.join("empty/predictions.csv")).unwrap(),
        "query_index,prediction,effective_neighbors,h_used\n"
    );
}

#[test]
fn query_grid_mismatch_is_reported_with_row() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("x.csv"), "0,0.5,1\n0.1,0.2,0.3\n").unwrap();
    fs::write(d.join("y.csv"), "1\n").unwrap();
    fs::write(d.join("q.csv"), "0,0.25,1\n0.1,0.2,0.3\n").unwrap();
    write_config(d, "knn.json", &fit_config(r#"{"type": "knn", "k": 1}"#));
    let o = fdreg(&["fit", "--config", "knn.json", "--out", "o"], d);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("grid mismatch") && err.contains("row 0"), "{err}");
    assert!(!d.join("o/predictions.csv").exists());
}

#[test]
fn convergence_single_cell() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_config(
        d,
        "conv.json",
        r#"{"seed": 2, "grid_intervals": 32,
            "convergence": {"process": {"type": "smooth_fourier", "modes": 5, "decay": 1.0},
                            "regression": {"eta": {"type": "integral_mean"}, "noise_sd": 0.1},
                            "estimator": {"family": {"variant": "discretize"}},
                            "n_values": [20], "p_values": [8], "replications": 1, "queries": 10}}"#,
    );
    run_ok(d, "convergence", "conv.json", "a");
    run_ok(d, "convergence", "conv.json", "b");
    let rows = csv_rows(&d.join("a/sweep.csv"));
    assert_eq!(rows[0], ["n", "p", "variant", "mse", "mse_full", "replications", "seed"]);
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[1][..3], ["20", "8", "discretize"]);
    assert_eq!(
        fs::read(d.join("a/sweep.csv")).unwrap(),
        fs::read(d.join("b/sweep.csv")).unwrap()
    );
    let plot = csv_rows(&d.join("a/plot_data.csv"));
    assert_eq!(plot[0], ["n", "p", "variant", "series", "value"]);
}

#[test]
fn diagnose_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_config(
        d,
        "diag.json",
        r#"{"seed": 4, "grid_intervals": 64,
            "diagnose": {"process": {"type": "smooth_fourier", "modes": 10, "decay": 1.0},
                         "regression": {"eta": {"type": "constant", "value": 1.5}, "noise_sd": 0.0},
                         "besicovitch": {"n": 30, "deltas": [2.0, 1.0, 0.1]},
                         "h2": {"family": {"variant": "discretize"}, "cnp_scale": 1e-6,
                                "n_values": [50], "p_values": [128], "mc": 100},
                         "basis_check": {"family": "indicator", "p": 8}}}"#,
    );
    run_ok(d, "diagnose", "diag.json", "o");
    let bes = csv_rows(&d.join("o/besicovitch.csv"));
    assert!(bes[1..].iter().all(|r| r[1].parse::<f64>().unwrap() == 0.0));
    let h2 = csv_rows(&d.join("o/h2.csv"));
    assert_eq!(h2[1][4].parse::<f64>().unwrap(), 0.0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("o/basis_conditions.json")).unwrap()).unwrap();
    assert_eq!(report["a"], true);
    assert_eq!(report["C3"], 1.0);
    assert_eq!(report["m"], 1);
}
