use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn gspde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gspde"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    gspde(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let name = p.strip_prefix(dir).unwrap().display().to_string();
                files.push((name, fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

const SAMPLE: &str = r#"
master_seed = 5

[sample]
kernel = { type = "fbm", H = 0.75 }
nodes = 33
n_paths = 2000
"#;

#[test]
fn sample_writes_reproducible_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "s.toml", SAMPLE);
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    let o = run("sample", &cfg, &a, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(run("sample", &cfg, &b, &["--jobs", "1"]).status.success());
    let fa = read_dir_sorted(&a);
    let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["ensemble.bin", "ensemble.csv", "fidelity.json"]);
    // the output directory is part of the recorded header, so compare after
    // pointing the second run at the first run's directory
    assert!(run("sample", &cfg, &a, &["--jobs", "1"]).status.success());
    assert_eq!(fa, read_dir_sorted(&a));
    let fb = read_dir_sorted(&b);
    assert_eq!(fa[0], fb[0], "binary dumps must not depend on the output path or thread count");

    assert!(run("sample", &cfg, &c, &["--seed", "6"]).status.success());
    assert_ne!(fa[0].1, read_dir_sorted(&c)[0].1);

    let csv = String::from_utf8(fa[1].1.clone()).unwrap();
    assert!(csv.starts_with("# [config]\n# master_seed = 5\n"));
    assert!(csv.contains("# [seeds]"));
    assert!(csv.contains("# r = 1.5"));
    let report: serde_json::Value = serde_json::from_slice(&fa[2].1).unwrap();
    assert_eq!(report["resolved"]["config"]["master_seed"], 5);
    assert_eq!(report["report"]["n_paths"], 2000);
    assert_eq!(report["report"]["fidelity"]["entries"].as_array().unwrap().len(), 36);
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o");
    let zero = write_config(dir.path(), "z.toml", &SAMPLE.replace("n_paths = 2000", "n_paths = 0"));
    let o = run("sample", &zero, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n_paths"));

    let unseeded = write_config(dir.path(), "u.toml", &SAMPLE.replace("master_seed = 5", ""));
    let o = run("sample", &unseeded, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("master_seed"));

    let typo = write_config(dir.path(), "t.toml", &SAMPLE.replace("nodes = 33", "nodez = 33"));
    let o = run("sample", &typo, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));

    let bad_h = write_config(dir.path(), "h.toml", &SAMPLE.replace("H = 0.75", "H = 0.4"));
    let o = run("sample", &bad_h, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sample.kernel"));

    let o = run("solve", &write_config(dir.path(), "s.toml", SAMPLE), &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("[solve]"));
    assert!(!out.exists());
}

const VERIFY: &str = r#"
master_seed = 9

[verify]
suites = ["isometry", "conditions"]
kernels = [{ type = "fbm", H = 0.75 }]
nodes = 65
n_paths = 4000
condition_samples = 60
operators = [{ n = 6, drift = { type = "p_laplace", p = 4.0 } }]
"#;

#[test]
fn verify_passes_and_injected_offset_fails() {
    let dir = TempDir::new().unwrap();
    let good = write_config(dir.path(), "v.toml", VERIFY);
    let o = run("verify", &good, &dir.path().join("good"), &[]);
    assert!(o.status.success(), "{}{}", String::from_utf8_lossy(&o.stdout), stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("good/verify.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["pass"], true);
    assert_eq!(report["report"]["checks"].as_array().unwrap().len(), 6 + 4);
    let h2 = report["report"]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["label"].as_str().unwrap().ends_with("H2"))
        .unwrap();
    assert!(h2["detail"].as_str().unwrap().contains("declared c = 0"));

    let bad = write_config(
        dir.path(),
        "b.toml",
        &format!("{VERIFY}inject_oracle_offset = 1.0\n"),
    );
    let o = run("verify", &bad, &dir.path().join("bad"), &[]);
    assert_eq!(o.status.code(), Some(4));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("bad/verify.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["pass"], false);
    assert_eq!(report["report"]["failed"], 6);
}

const HEAT: &str = r#"
master_seed = 1

[problem]
kernel = { type = "fbm", H = 0.75 }
noise = { law = "explicit", lambdas = [1.0] }
operator = { n = 3, drift = { type = "linear_heat" } }
initial = { type = "deterministic", coeffs = [1.0, 0.0, -0.5] }
solver = { dt = 0.0078125, horizon = 1.0 }

[solve]
n_runs = 2
write_paths = 1
"#;

fn last_rows(csv: &str, dim: usize) -> Vec<Vec<f64>> {
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('t'))
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    rows[rows.len() - dim..].to_vec()
}

#[test]
fn deterministic_heat_matches_per_mode_recursion() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "h.toml", HEAT);
    let out = dir.path().join("o");
    let o = run("solve", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("paths/run_00000.csv")).unwrap();
    let dt: f64 = 0.0078125;
    let init = [1.0, 0.0, -0.5];
    for row in last_rows(&csv, 3) {
        let k = row[1] as usize;
        let lambda = (PI * (k + 1) as f64).powi(2);
        let exact = init[k] * (1.0 + dt * lambda).powi(-128);
        assert!((row[0] - 1.0).abs() < 1e-15);
        assert!((row[2] - exact).abs() <= 1e-12 * exact.abs().max(1e-300), "mode {k}: {} vs {exact}", row[2]);
        assert_eq!(row[2], row[3]);
        assert_eq!(row[4], 0.0);
    }
    let modes: serde_json::Value = serde_json::from_slice(&fs::read(out.join("modes.json")).unwrap()).unwrap();
    assert_eq!(modes["report"]["pass"], true);
    for name in ["diagnostics.json", "moments.json"] {
        assert!(out.join(name).exists());
    }
    assert!(!out.join("paths/run_00001.csv").exists());
}

#[test]
fn forced_heat_mode_variance_and_rates() {
    let dir = TempDir::new().unwrap();
    let text = HEAT
        .replace("n_runs = 2", "n_runs = 400\nwith_rates = true")
        .replace("[solve]", "h = { type = \"projection\", modes = [0] }\n\n[solve]")
        + "\n[rates]\ndt_list = [0.0625, 0.03125, 0.015625]\nn_runs = 4\n";
    let cfg = write_config(dir.path(), "f.toml", &text);
    let out = dir.path().join("o");
    let o = run("solve", &cfg, &out, &[]);
    assert!(o.status.success(), "{}{}", String::from_utf8_lossy(&o.stdout), stderr(&o));
    let modes: serde_json::Value = serde_json::from_slice(&fs::read(out.join("modes.json")).unwrap()).unwrap();
    let m0 = &modes["report"]["modes"][0];
    assert!(m0["variance"].as_f64().unwrap() > 0.0);
    assert_eq!(m0["pass"], true);
    assert_eq!(modes["report"]["modes"][1]["variance"], 0.0);
    let rates = fs::read_to_string(out.join("rates.csv")).unwrap();
    assert_eq!(rates.lines().filter(|l| !l.starts_with('#')).count(), 4);

    let again = dir.path().join("r");
    let o = run("rates", &cfg, &again, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let a = fs::read_to_string(again.join("rates.csv")).unwrap();
    let strip = |s: &str| s.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&a), strip(&rates));
}

#[test]
fn contraction_violation_is_reported_before_any_output() {
    let dir = TempDir::new().unwrap();
    let text = HEAT.replace(
        "drift = { type = \"linear_heat\" }",
        "drift = { type = \"custom\", diagonal = [1.0, 1.0, 1.0], constants = { c = 200.0, alpha = 2.0 } }",
    );
    let cfg = write_config(dir.path(), "c.toml", &text);
    let out = dir.path().join("o");
    let o = run("solve", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("contractive"));
    assert!(!out.exists());
}

#[test]
fn inner_solver_failure_reports_the_step() {
    let dir = TempDir::new().unwrap();
    let text = HEAT
        .replace("type = \"linear_heat\"", "type = \"p_laplace\", p = 4.0")
        .replace("horizon = 1.0 }", "horizon = 1.0, inner_max_iter = 1, inner_tol = 1e-15, inner_method = \"fixed_point\" }");
    let cfg = write_config(dir.path(), "p.toml", &text);
    let o = run("solve", &cfg, &dir.path().join("o"), &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("at step 0"), "{}", stderr(&o));
}
