use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use riskbound::formats::{read_json, write_json, InstanceJson, SolutionJson};
use riskbound_core::lp::{solve_transport, Sense};
use riskbound_core::{Instance, LossMatrix, ProbabilityVector};
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn riskbound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riskbound"))
        .args(args)
        .env("RISKBOUND_LOG", "error")
        .output()
        .unwrap()
}

fn value_of(out: &Output) -> f64 {
    let text = String::from_utf8_lossy(&out.stdout);
    let line = text
        .lines()
        .find_map(|l| l.strip_prefix("value: "))
        .unwrap_or_else(|| panic!("no value line in {text}"));
    line.trim().parse().unwrap()
}

fn write_instance(dir: &Path, name: &str, json: &InstanceJson) -> String {
    let path = dir.join(name);
    write_json(&path, json).unwrap();
    path.to_str().unwrap().to_string()
}

/// A 4 x 5 instance with irregular weights and losses.
fn irregular() -> InstanceJson {
    let mu = vec![0.1, 0.35, 0.25, 0.3];
    let nu = vec![0.2, 0.15, 0.3, 0.05, 0.3];
    let loss = (0..4)
        .map(|i| (0..5).map(|j| ((i * 7 + j * 3) % 11) as f64 - 0.5 * j as f64).collect())
        .collect();
    InstanceJson { mu, nu, loss, sigma: None }
}

#[test]
fn one_by_one_instance_prints_its_single_loss() {
    let dir = TempDir::new().unwrap();
    let inst = InstanceJson { mu: vec![1.0], nu: vec![1.0], loss: vec![vec![3.25]], sigma: None };
    let path = write_instance(dir.path(), "one.json", &inst);
    let out = riskbound(&["mes", &path, "--alpha", "0.7"]);
    assert!(out.status.success());
    assert_eq!(value_of(&out), 3.25);
}

#[test]
fn comonotone_fixture_and_solution_file() {
    let dir = TempDir::new().unwrap();
    let sol_path = dir.path().join("sol.json");
    let out = riskbound(&[
        "mes",
        fixture("comonotone_2x2.json").to_str().unwrap(),
        "--out",
        sol_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!((value_of(&out) - 2.0).abs() < 1e-12);
    assert!(String::from_utf8_lossy(&out.stdout).contains("nonzero cells: 2"));

    let inst: Instance = read_json::<InstanceJson>(&fixture("comonotone_2x2.json"))
        .unwrap()
        .to_instance()
        .unwrap();
    let sol: SolutionJson = read_json(&sol_path).unwrap();
    assert!((sol.value() - 2.0).abs() < 1e-12);
    let report = sol.verify(&inst).unwrap();
    assert!(report.gap.abs() <= 1e-7);
}

#[test]
fn oracle_command_agrees_with_mes() {
    let dir = TempDir::new().unwrap();
    let path = write_instance(dir.path(), "irr.json", &irregular());
    let a = value_of(&riskbound(&["mes", &path, "--alpha", "0.6"]));
    let b = value_of(&riskbound(&["oracle", &path, "--alpha", "0.6"]));
    assert!((a - b).abs() < 1e-6, "{a} vs {b}");
}

#[test]
fn msp_with_es_spectrum_equals_mes() {
    let dir = TempDir::new().unwrap();
    let path = write_instance(dir.path(), "irr.json", &irregular());
    let sol_path = dir.path().join("msp.json");
    let mes = value_of(&riskbound(&["mes", &path, "--alpha", "0.9"]));
    let out = riskbound(&["msp", &path, "--sigma-spec", "es:0.9", "--out", sol_path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!((value_of(&out) - mes).abs() < 1e-9);
    let sol: SolutionJson = read_json(&sol_path).unwrap();
    assert!(matches!(sol, SolutionJson::Msp { .. }));
}

#[test]
fn flat_spectrum_is_the_transport_maximum() {
    let dir = TempDir::new().unwrap();
    let json = irregular();
    let path = write_instance(dir.path(), "irr.json", &json);
    let v = value_of(&riskbound(&["msp", &path, "--sigma-spec", "flat"]));
    let mu = ProbabilityVector::new(json.mu.clone()).unwrap();
    let nu = ProbabilityVector::new(json.nu.clone()).unwrap();
    let loss = LossMatrix::new(4, 5, json.loss.concat()).unwrap();
    let ot = solve_transport(&mu, &nu, &loss, Sense::Maximize).unwrap();
    assert!((v - ot.value).abs() < 1e-9, "{v} vs {}", ot.value);
}

#[test]
fn power_sqrt_values_decrease_as_the_grid_refines() {
    let dir = TempDir::new().unwrap();
    let path = write_instance(dir.path(), "irr.json", &irregular());
    let v: Vec<f64> = ["8", "16", "32"]
        .iter()
        .map(|k| value_of(&riskbound(&["msp", &path, "--sigma-spec", "power-sqrt", "--levels", k])))
        .collect();
    assert!(v[1] <= v[0] + 1e-9 && v[2] <= v[1] + 1e-9, "{v:?}");
    assert!(v[0] - v[2] < 0.05, "{v:?}");
}

#[test]
fn mps_dump_is_written() {
    let dir = TempDir::new().unwrap();
    let mps = dir.path().join("mes.mps");
    let out = riskbound(&[
        "mes",
        fixture("comonotone_2x2.json").to_str().unwrap(),
        "--dump-mps",
        mps.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(mps).unwrap();
    assert!(text.starts_with("NAME          MES\n"));
    assert!(text.ends_with("ENDATA\n"));
}

#[test]
fn malformed_json_exits_one_with_location() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\n  \"mu\": [0.5, 0.5],\n  \"nu\": [1.0\n}\n").unwrap();
    let out = riskbound(&["mes", path.to_str().unwrap(), "--alpha", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn invalid_marginal_exits_two() {
    let dir = TempDir::new().unwrap();
    let inst = InstanceJson { mu: vec![0.5, 0.4], nu: vec![1.0], loss: vec![vec![1.0], vec![2.0]], sigma: None };
    let path = write_instance(dir.path(), "short.json", &inst);
    let out = riskbound(&["mes", &path, "--alpha", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_sigma_spec_exits_two() {
    let out = riskbound(&["msp", fixture("comonotone_2x2.json").to_str().unwrap(), "--sigma-spec", "es:1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_exits_one() {
    for cmd in ["clt", "stability"] {
        let out = riskbound(&[cmd, "/nonexistent/config.json"]);
        assert_eq!(out.status.code(), Some(1), "{cmd}");
    }
}

#[test]
fn clt_smoke_run_writes_two_rows() {
    let dir = TempDir::new().unwrap();
    let out = riskbound(&[
        "clt",
        fixture("smoke_resample.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("samples.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(dir.path().join("summary.json").exists());
    assert!(dir.path().join("histogram.svg").exists());
}

#[test]
fn seeded_clt_runs_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let cfg = fixture("smoke_resample.json");
    let cfg = cfg.to_str().unwrap();
    let run = |dir: &TempDir, threads: &str| {
        let out = riskbound(&["clt", cfg, "--seed", "11", "--threads", threads, "--out", dir.path().to_str().unwrap()]);
        assert!(out.status.success());
    };
    run(&a, "1");
    run(&b, "3");
    for f in ["samples.csv", "summary.json", "histogram.svg"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn stability_sweep_starts_with_an_unperturbed_row() {
    let dir = TempDir::new().unwrap();
    let out = riskbound(&[
        "stability",
        fixture("stability_3x3.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_path(dir.path().join("stability.csv")).unwrap();
    let rows: Vec<Vec<f64>> = reader
        .records()
        .map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 12);
    assert_eq!(rows[0][0], 0.0);
    assert_eq!(rows[0][4], 0.0);
    for r in &rows {
        assert!(r[4] <= r[5] + 1e-7, "{r:?}");
    }
}
