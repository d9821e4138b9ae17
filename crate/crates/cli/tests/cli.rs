use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use freespectra::{quantiles, DensityCurve};
use tempfile::TempDir;

const MP: &str = r#"{"network": {"layers": [{"nonlinearity": "linear", "sigma_w_sq": 1.0, "lambda": 1.0}]}}"#;
const RELU4: &str = r#"{
  "network": {"layers": [
    {"nonlinearity": "relu", "sigma_w_sq": 2.0},
    {"nonlinearity": "relu", "sigma_w_sq": 2.0},
    {"nonlinearity": "relu", "sigma_w_sq": 2.0},
    {"nonlinearity": "relu", "sigma_w_sq": 2.0}
  ]}
}"#;

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let path = self.dir.path().join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_freespectra"));
    cmd.args(args).env_remove("FREESPECTRA_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn meta(text: &str, key: &str) -> f64 {
    text.lines()
        .filter_map(|l| l.strip_prefix("# "))
        .filter_map(|l| l.split_once('='))
        .find(|(k, _)| *k == key)
        .map(|(_, v)| v.parse().unwrap())
        .unwrap_or_else(|| panic!("no metadata {key}"))
}

/// Numeric rows below the header line.
fn rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect()
}

fn header(text: &str) -> &str {
    text.lines().find(|l| !l.starts_with('#')).unwrap()
}

#[test]
fn density_of_marchenko_pastur() {
    let ws = Workspace::new();
    // linear grid with x = 2 on a node
    let config = ws.file(
        "mp.json",
        &MP.replacen(
            '{',
            r#"{"grid": {"x_min": 0.02, "x_max": 4.0, "log_spaced": false}, "#,
            1,
        ),
    );
    let out = ws.path("mp.csv");
    let o = run(&["density", "--config", s(&config), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(header(&text), "x,rho");
    assert_eq!(meta(&text, "y"), 1e-6);
    assert!(meta(&text, "newton_iterations") > 0.0);
    assert!(meta(&text, "basins_chained") > 0.0);
    let table = rows(&text);
    assert_eq!(table.len(), 200);
    let nearest = table
        .iter()
        .min_by(|a, b| (a[0] - 2.0).abs().total_cmp(&(b[0] - 2.0).abs()))
        .unwrap();
    assert!((nearest[0] - 2.0).abs() < 1e-12);
    assert!((nearest[1] - 0.159155).abs() < 1e-4, "{}", nearest[1]);
}

#[test]
fn density_of_deep_relu_network() {
    let ws = Workspace::new();
    let config = ws.file("relu.json", RELU4);
    let out = ws.path("nested/../relu.csv");
    let o = run(&["density", "--config", s(&config), "--out", s(&ws.path("relu.csv"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!out.exists());
    let text = std::fs::read_to_string(ws.path("relu.csv")).unwrap();
    let table = rows(&text);
    assert_eq!(table.len(), 200);
    assert!(table.iter().all(|r| r[1] >= 0.0));
    assert_eq!(meta(&text, "atom_mass"), 0.5);
}

#[test]
fn non_positive_y_is_refused() {
    let ws = Workspace::new();
    let config = ws.file("bad.json", &MP.replacen('{', r#"{"y": -1.0, "#, 1));
    let o = run(&["density", "--config", s(&config)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("y must be positive"), "{}", stderr(&o));

    let config = ws.file("mp.json", MP);
    let o = run(&["density", "--config", s(&config), "--y", "0"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("y must be positive"));
}

#[test]
fn config_errors_name_the_field_and_line() {
    let ws = Workspace::new();
    let config = ws.file("typo.json", "{\n  \"network\": {\"layers\": []},\n  \"pionts\": 5\n}\n");
    let o = run(&["density", "--config", s(&config)]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("pionts") && err.contains("line 3"), "{err}");

    let o = run(&["density", "--config", s(&ws.path("missing.json"))]);
    assert!(!o.status.success());
    let o = run(&["density"]);
    assert!(stderr(&o).contains("--config is required"));
}

#[test]
fn uniform_quantiles() {
    let o = run(&["quantiles", "--uniform", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(header(&text), "p,quantile,log10_quantile");
    let table = rows(&text);
    assert_eq!(table.len(), 9);
    let median = table.iter().find(|r| r[0] == 0.5).unwrap();
    assert!((median[1] - 2.0).abs() < 1e-9);
    assert!((median[2] - 2f64.log10()).abs() < 1e-9);
}

#[test]
fn marchenko_pastur_median_matches_quadrature() {
    let ws = Workspace::new();
    let config = ws.file(
        "mp.json",
        &MP.replacen('{', r#"{"probs": [0.5], "grid": {"points": 1000}, "#, 1),
    );
    let o = run(&["quantiles", "--config", s(&config)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let median = rows(&String::from_utf8(o.stdout).unwrap())[0][1];
    // root of the closed-form distribution function at one half
    assert!((median - 0.652_775_941_633_570_4).abs() < 1e-3, "{median}");
}

#[test]
fn probabilities_outside_the_unit_interval_are_config_errors() {
    let ws = Workspace::new();
    let config = ws.file("p.json", &MP.replacen('{', r#"{"probs": [0.5, 1.5], "#, 1));
    let o = run(&["quantiles", "--config", s(&config)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("outside (0, 1)"));
}

#[test]
fn artifacts_reproduce_quantiles_bit_for_bit() {
    let ws = Workspace::new();
    for format in ["csv", "json"] {
        let cfg = RELU4.replacen('{', &format!(r#"{{"output": {{"format": "{format}"}}, "#), 1);
        let config = ws.file(&format!("relu-{format}.json"), &cfg);
        let density = ws.path(&format!("density.{format}"));
        let quant = ws.path(&format!("quantiles.{format}"));
        assert!(run(&["density", "--config", s(&config), "--out", s(&density)])
            .status
            .success());
        let o = run(&["quantiles", "--config", s(&config), "--out", s(&quant)]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(String::from_utf8(o.stdout).unwrap().contains("log10="));

        let text = std::fs::read_to_string(&density).unwrap();
        let (xs, rhos, y, atom, alb, reported): (Vec<f64>, Vec<f64>, f64, f64, f64, Vec<f64>) = if format == "csv" {
            let t = rows(&text);
            let q = rows(&std::fs::read_to_string(&quant).unwrap());
            (
                t.iter().map(|r| r[0]).collect(),
                t.iter().map(|r| r[1]).collect(),
                meta(&text, "y"),
                meta(&text, "atom_mass"),
                meta(&text, "atom_lower_bound"),
                q.iter().map(|r| r[1]).collect(),
            )
        } else {
            let d: serde_json::Value = serde_json::from_str(&text).unwrap();
            let q: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&quant).unwrap()).unwrap();
            let vec = |v: &serde_json::Value| v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
            (
                vec(&d["x"]),
                vec(&d["rho"]),
                d["y"].as_f64().unwrap(),
                d["atom_mass"].as_f64().unwrap(),
                d["atom_lower_bound"].as_f64().unwrap(),
                vec(&q["quantiles"]),
            )
        };
        let curve = DensityCurve::from_samples(xs, rhos, y, atom, alb).unwrap();
        let probs: Vec<f64> = (1..10).map(|k| k as f64 / 10.0).collect();
        let again = quantiles(&curve, &probs).unwrap().values;
        assert_eq!(
            again.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            reported.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            "{format}"
        );
    }
}

#[test]
fn validation_against_monte_carlo() {
    let ws = Workspace::new();
    for (name, cfg, seed) in [("mp", MP, "42"), ("relu", RELU4, "1")] {
        let config = ws.file(
            &format!("{name}.json"),
            &cfg.replacen('{', r#"{"grid": {"points": 1000}, "#, 1),
        );
        let o = run(&["validate", "--config", s(&config), "--seed", seed]);
        assert!(o.status.success(), "{name}: {}", stderr(&o));
        let text = String::from_utf8(o.stdout).unwrap();
        let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(row[0], "1000");
        assert!(row[2].parse::<f64>().unwrap() <= 0.08, "{name}: {}", row[2]);
        assert_eq!(row[4], "true");
    }
}

#[test]
fn validation_needs_monte_carlo() {
    let ws = Workspace::new();
    let config = ws.file("off.json", &MP.replacen('{', r#"{"mc": {"enabled": false}, "#, 1));
    let o = run(&["validate", "--config", s(&config)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("validation requires mc.enabled"));
}

fn bench_rows(args: &[&str]) -> Vec<Vec<String>> {
    let o = run(args);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(
        header(&text),
        "stage,depth,degree,points,wall_ms,iterations,iterations_per_point"
    );
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn bench_reports_three_positive_timings() {
    let ws = Workspace::new();
    let config = ws.file("relu.json", &RELU4.replacen('{', r#"{"mc": {"n0": 200}, "#, 1));
    let table = bench_rows(&["bench", "--config", s(&config)]);
    let stages: Vec<&str> = table.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(stages, ["lilypads", "all_roots", "monte_carlo"]);
    assert!(table.iter().all(|r| r[4].parse::<f64>().unwrap() > 0.0));
}

#[test]
fn bench_iterations_grow_sublinearly_in_points() {
    let ws = Workspace::new();
    let config = ws.file("relu.json", &RELU4.replacen('{', r#"{"mc": {"enabled": false}, "#, 1));
    let iterations = |points: &str| {
        let table = bench_rows(&["bench", "--config", s(&config), "--points", points]);
        assert_eq!(table.len(), 2);
        table[0][5].parse::<f64>().unwrap()
    };
    let ratio = iterations("400") / iterations("200");
    assert!(ratio < 2.0, "{ratio}");
}

#[test]
fn bench_depth_sweep_records_linear_degree() {
    let ws = Workspace::new();
    let config = ws.file(
        "relu.json",
        &RELU4.replacen('{', r#"{"mc": {"enabled": false}, "grid": {"points": 40}, "#, 1),
    );
    let table = bench_rows(&["bench", "--config", s(&config), "--depths", "2,3,4,5,6,7,8"]);
    let degrees: Vec<usize> = table
        .iter()
        .filter(|r| r[0] == "lilypads")
        .map(|r| r[2].parse().unwrap())
        .collect();
    assert_eq!(degrees.len(), 7);
    let steps: Vec<usize> = degrees.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(steps.iter().all(|d| *d == steps[0] && *d > 0), "{degrees:?}");
}

#[test]
fn thread_cap_leaves_output_unchanged() {
    let ws = Workspace::new();
    let config = ws.file("relu.json", RELU4);
    let default = run(&["density", "--config", s(&config)]);
    let single = run_env(&["density", "--config", s(&config)], &[("FREESPECTRA_THREADS", "1")]);
    assert!(default.status.success() && single.status.success());
    assert_eq!(default.stdout, single.stdout);
    let bad = run_env(&["density", "--config", s(&config)], &[("FREESPECTRA_THREADS", "zero")]);
    assert!(stderr(&bad).contains("FREESPECTRA_THREADS"));
}

#[test]
fn quantiles_from_a_saved_density() {
    let ws = Workspace::new();
    let config = ws.file("relu.json", RELU4);
    let density = ws.path("d.csv");
    assert!(run(&["density", "--config", s(&config), "--out", s(&density)])
        .status
        .success());
    let direct = run(&["quantiles", "--config", s(&config)]);
    let replay = run(&["quantiles", "--from", s(&density)]);
    assert!(replay.status.success(), "{}", stderr(&replay));
    assert_eq!(direct.stdout, replay.stdout);
    let o = run(&["quantiles", "--from", s(&config)]);
    assert!(stderr(&o).contains("invalid density artifact"));
}
