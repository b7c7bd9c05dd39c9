use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_corrgme");

const DESK: &str = include_str!("../scenarios/desk.toml");

const OHMIC: &str = r#"
omega0 = 1.0
beta = 1.0
system_dim = 6
t_max = 5.0
dt = 0.05
sample_every = 2

[bath.ohmic]
eta = 0.1
omega_c = 1.0
omega_max = 10.0
mode_count = 400
"#;

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--quiet")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

/// Header and column names, then the numeric rows.
fn read_csv(path: &Path) -> (String, Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let columns = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, columns, rows)
}

fn column(columns: &[String], rows: &[Vec<f64>], name: &str) -> Vec<f64> {
    let i = columns.iter().position(|c| c == name).unwrap();
    rows.iter().map(|r| r[i]).collect()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn code(output: &Output) -> i32 {
    output.status.code().unwrap()
}

#[test]
fn zero_coupling_gives_zero_rates() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "zero.toml", &OHMIC.replace("eta = 0.1", "eta = 0.0"));
    let out = dir.path().join("out");
    let result = run(&["rates"], &cfg, &out);
    assert_eq!(code(&result), 0, "{}", String::from_utf8_lossy(&result.stderr));
    let (header, columns, rows) = read_csv(&out.join("rates.csv"));
    assert_eq!(header, "# corrgme rates schema=1");
    assert!(!rows.is_empty());
    for row in &rows {
        assert!(row[1..].iter().all(|v| *v == 0.0), "{row:?}");
    }
    assert_eq!(columns[0], "t");
}

#[test]
fn rates_table_is_ordered_and_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "ohmic.toml", OHMIC);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&run(&["rates"], &cfg, &a)), 0);
    assert_eq!(code(&run(&["rates"], &cfg, &b)), 0);
    let bytes = fs::read(a.join("rates.csv")).unwrap();
    assert_eq!(bytes, fs::read(b.join("rates.csv")).unwrap());

    let (_, columns, rows) = read_csv(&a.join("rates.csv"));
    let t = column(&columns, &rows, "t");
    assert_eq!(t[0], 0.0);
    assert!(t.windows(2).all(|w| w[1] > w[0]));
    assert!((t.last().unwrap() - 5.0).abs() < 1e-12);
    for name in [
        "gamma0_re",
        "gamma0_im",
        "gamma0_prime_re",
        "gamma0_prime_im",
        "ki_plus_re",
        "ki_plus_im",
        "ki_minus_re",
        "ki_minus_im",
    ] {
        assert_eq!(column(&columns, &rows, name)[0], 0.0, "{name}");
    }
    // The shift constants are time independent and nonzero.
    let lsi = column(&columns, &rows, "lsi_plus");
    assert!(lsi[0] != 0.0 && lsi.iter().all(|v| *v == lsi[0]));
}

#[test]
fn lindblad_run_relaxes_to_thermal_occupation() {
    let dir = TempDir::new().unwrap();
    let text = OHMIC
        .replace("system_dim = 6", "system_dim = 16")
        .replace("t_max = 5.0", "t_max = 250.0")
        .replace("dt = 0.05", "dt = 0.005")
        .replace("sample_every = 2", "sample_every = 500\nmode = \"lindblad\"")
        + "\n[initial]\ndisplacement = [1.0, 0.0]\nbeta = 3.0\n";
    let cfg = write_config(&dir, "lindblad.toml", &text);
    let out = dir.path().join("out");
    let result = run(&["evolve"], &cfg, &out);
    assert_eq!(code(&result), 0, "{}", String::from_utf8_lossy(&result.stderr));
    let summary = read_json(&out.join("summary.json"));
    let n0 = summary["equilibrium_occupation"].as_f64().unwrap();
    let last = summary["final_observables"]["occupation"].as_f64().unwrap();
    assert!((last - n0).abs() < 0.01 * n0, "{last} vs {n0}");
    assert_eq!(summary["status"], "ok");
    assert!(summary["markov"]["rate_down"].as_f64().unwrap() > 0.0);
}

#[test]
fn correlation_terms_change_the_trajectory() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "desk.toml",
        &DESK.replace("t_max = 62.83185307179586", "t_max = 5.0"),
    );
    let (full, plain) = (dir.path().join("full"), dir.path().join("plain"));
    assert_eq!(code(&run(&["evolve", "--mode", "full"], &cfg, &full)), 0);
    assert_eq!(code(&run(&["evolve", "--mode", "no-correlations"], &cfg, &plain)), 0);
    let (_, columns, a) = read_csv(&full.join("trajectory.csv"));
    let (_, _, b) = read_csv(&plain.join("trajectory.csv"));
    let difference = column(&columns, &a, "amplitude_re")
        .iter()
        .zip(column(&columns, &b, "amplitude_re"))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    assert!(difference > 1e-8, "{difference}");
    for rows in [&a, &b] {
        let trace = column(&columns, rows, "trace_error");
        assert!(trace.iter().all(|e| *e < 1e-8));
    }
}

#[test]
fn evolve_output_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "desk.toml",
        &DESK.replace("t_max = 62.83185307179586", "t_max = 3.0"),
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&run(&["evolve"], &cfg, &a)), 0);
    assert_eq!(code(&run(&["evolve"], &cfg, &b)), 0);
    for file in ["trajectory.csv", "summary.json"] {
        assert_eq!(
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }
    let (header, columns, _) = read_csv(&a.join("trajectory.csv"));
    assert_eq!(header, "# corrgme trajectory schema=1");
    assert_eq!(
        columns,
        [
            "t",
            "occupation",
            "amplitude_re",
            "amplitude_im",
            "trace_error",
            "hermiticity_defect",
            "min_eigenvalue",
            "cancellation_residual"
        ]
    );
}

#[test]
fn default_verify_passes_and_negative_control_fails() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "desk.toml", DESK);
    let good = dir.path().join("good");
    let result = run(&["verify"], &cfg, &good);
    assert_eq!(code(&result), 0, "{}", String::from_utf8_lossy(&result.stderr));
    let report = read_json(&good.join("verify.json"));
    assert_eq!(report["pass"], true);
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.len() >= 8);
    for check in checks {
        assert!(check["value"].is_f64(), "{check}");
    }

    let bad = dir.path().join("bad");
    let result = run(&["verify", "--corrupt-cancellation-sign"], &cfg, &bad);
    assert_eq!(code(&result), 4);
    let report = read_json(&bad.join("verify.json"));
    assert_eq!(report["pass"], false);
    let failed: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(failed.contains(&"cancellation_plus"), "{failed:?}");
    assert!(report["cancellation"]["worst_plus"].as_f64().unwrap() > 1e-6);
}

#[test]
fn unknown_key_is_a_config_error_with_line() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "typo.toml",
        &OHMIC.replace("mode_count = 400", "mode_count = 400\nomega_cc = 2.0"),
    );
    let result = run(&["rates"], &cfg, &dir.path().join("out"));
    assert_eq!(code(&result), 2);
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("omega_cc") && stderr.contains("line 14"), "{stderr}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn two_bath_sources_are_rejected() {
    let dir = TempDir::new().unwrap();
    let text = OHMIC.replace(
        "[bath.ohmic]",
        "[bath]\nmodes = [{ omega = 0.5, coupling = 0.1 }]\n[bath.ohmic]",
    );
    let cfg = write_config(&dir, "both.toml", &text);
    assert_eq!(code(&run(&["rates"], &cfg, &dir.path().join("out"))), 2);
}

#[test]
fn config_round_trips() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "desk.toml", DESK);
    let first = run(&["check-config"], &cfg, &dir.path().join("out"));
    assert_eq!(code(&first), 0);
    let printed = String::from_utf8(first.stdout).unwrap();
    let again = write_config(&dir, "again.toml", &printed);
    let second = run(&["check-config"], &again, &dir.path().join("out"));
    assert_eq!(String::from_utf8(second.stdout).unwrap(), printed);
}

#[test]
fn stability_gate_exits_three_with_reason() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "coarse.toml", &DESK.replace("dt = 0.01", "dt = 0.3"));
    let out = dir.path().join("out");
    assert_eq!(code(&run(&["evolve"], &cfg, &out)), 3);
    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["status"], "gate-violation");
    let failure = &summary["gate_failures"][0];
    assert_eq!(failure["gate"], "stability");
    let suggested = failure["suggested_dt"].as_f64().unwrap();
    assert!(suggested < 0.3 && suggested > 0.0);
}

#[test]
fn truncation_tail_gate_exits_three() {
    let dir = TempDir::new().unwrap();
    let text = DESK
        .replace("beta = 3.0", "beta = 1.0")
        .replace("t_max = 62.83185307179586", "t_max = 1.0");
    let cfg = write_config(&dir, "hot.toml", &text);
    let out = dir.path().join("out");
    assert_eq!(code(&run(&["evolve"], &cfg, &out)), 3);
    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["gate_failures"][0]["gate"], "tail");
    assert!(out.join("trajectory.csv").exists());
}

#[test]
fn oversized_oracle_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "cap.toml", &DESK.replace("probes = 20", "probes = 20\ncap = 100"));
    let result = run(&["verify"], &cfg, &dir.path().join("out"));
    assert_eq!(code(&result), 2);
    assert!(String::from_utf8_lossy(&result.stderr).contains("exceeds cap 100"));
}

#[test]
fn oracle_compare_writes_distances() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "desk.toml",
        &DESK.replace("t_max = 62.83185307179586", "t_max = 5.0"),
    );
    let out = dir.path().join("out");
    assert_eq!(code(&run(&["oracle-compare"], &cfg, &out)), 0);
    let (_, columns, rows) = read_csv(&out.join("oracle_compare.csv"));
    let d = column(&columns, &rows, "trace_distance");
    assert!(d[0] < 1e-3);
    let report = read_json(&out.join("oracle_compare.json"));
    let worst = report["run"]["max_trace_distance"].as_f64().unwrap();
    assert_eq!(worst, d.iter().cloned().fold(0.0, f64::max));
}

#[test]
fn markov_report_for_ohmic_bath() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "ohmic.toml", &OHMIC.replace("t_max = 5.0", "t_max = 100.0"));
    let out = dir.path().join("out");
    assert_eq!(code(&run(&["markov"], &cfg, &out)), 0);
    let report = read_json(&out.join("markov.json"));
    assert!(report["gamma0_relative_error"].as_f64().unwrap().abs() < 0.05);
    assert!(report["delta_omega0_relative_change"].as_f64().unwrap() < 1e-3);
    let limits = &report["limits"];
    let ratio = limits["rate_up"].as_f64().unwrap() / limits["rate_down"].as_f64().unwrap();
    assert!((ratio - (-1.0f64).exp()).abs() < 1e-10);
}

#[test]
fn sweep_writes_one_directory_per_value() {
    let dir = TempDir::new().unwrap();
    let text = DESK.replace("t_max = 62.83185307179586", "t_max = 2.0")
        + "\n[sweep]\nparameter = \"coupling_scale\"\nvalues = [0.5, 1.0, 2.0]\nworkers = 2\n";
    let cfg = write_config(&dir, "sweep.toml", &text);
    let out = dir.path().join("out");
    let result = run(&["sweep"], &cfg, &out);
    assert_eq!(code(&result), 0, "{}", String::from_utf8_lossy(&result.stderr));
    let report = read_json(&out.join("sweep.json"));
    let entries = report["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 3);
    for entry in entries {
        let sub = out.join(entry["dir"].as_str().unwrap());
        assert!(sub.join("trajectory.csv").exists());
        assert_eq!(entry["exit_code"], 0);
    }
}
