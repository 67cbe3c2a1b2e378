use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pairemit::config::ExperimentConfig;
use pairemit::experiment::{run_experiment, ReportBundle};
use pairemit::io::{read_events, write_events};

fn pairemit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pairemit"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn read_report(dir: &Path) -> ReportBundle {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn invalid_fields_exit_with_two_and_are_listed() {
    let tmp = tempfile::tempdir().unwrap();
    let out = pairemit(
        tmp.path(),
        &["simulate", "--n0", "0", "--set", "detector_efficiency=2", "--set", "bins=0"],
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for field in ["n0", "detector_efficiency", "bins"] {
        assert!(err.contains(field), "{err}");
    }
    assert!(!tmp.path().join("events.csv").exists());
}

#[test]
fn simulate_then_fit_matches_direct_run() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let out = pairemit(&a, &["simulate", "--n0", "20000", "--seed", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let events = a.join("events.csv");
    let out = Command::new(env!("CARGO_BIN_EXE_pairemit"))
        .args(["fit", "--n0", "20000", "--seed", "5", "--events"])
        .arg(&events)
        .arg("--out")
        .arg(&a)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let cfg = ExperimentConfig {
        n0: 20_000,
        seed: 5,
        output_dir: b.clone(),
        ..ExperimentConfig::default()
    };
    run_experiment(&cfg).unwrap();
    assert_eq!(fs::read(&events).unwrap(), fs::read(b.join("events.csv")).unwrap());
    let (ra, rb) = (read_report(&a), read_report(&b));
    assert_eq!(ra.fits, rb.fits);
    assert_eq!(ra.counts, rb.counts);
    for h in ["first", "second", "det1", "det2", "coincidence"] {
        let name = format!("hist_{h}.csv");
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name}");
    }
}

#[test]
fn events_file_round_trips_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        n0: 5_000,
        detector_efficiency: 0.6,
        output_dir: tmp.path().to_path_buf(),
        ..ExperimentConfig::default()
    };
    let run = run_experiment(&cfg).unwrap();
    let path = tmp.path().join("events.csv");
    let (em, det) = read_events(&path).unwrap();
    assert_eq!(em, run.events.emissions);
    assert_eq!(det, run.events.detections);
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("molecule_id,t_f,t_s,t1,t2,"));
    // some photons were lost at 60 % efficiency
    assert!(text.lines().skip(1).any(|l| l.contains(",,")));
    let copy = tmp.path().join("copy.csv");
    write_events(&copy, &em, &det).unwrap();
    assert_eq!(fs::read(&copy).unwrap(), text.into_bytes());
}

#[test]
fn check_flag_reports_failures_with_exit_three() {
    let tmp = tempfile::tempdir().unwrap();
    let ok = pairemit(tmp.path(), &["rates", "--check", "--set", "amplitude_params.grid.points=256"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("PASS ratio-main-identity"));
    assert!(tmp.path().join("rates.json").exists());

    // rates that violate the compatibility relations fail the figure identity
    let bad = pairemit(
        tmp.path(),
        &["fig1", "--check", "--set", "gamma_f_ratio=1.5", "--set", "fig1_overlay=false"],
    );
    assert_eq!(bad.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL fig1-identity"));
}

#[test]
fn config_file_and_overrides_combine() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("cfg.json");
    fs::write(&cfg_path, r#"{"n0": 3000, "seed": 11, "bins": 50}"#).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_pairemit"))
        .arg("simulate")
        .arg("--config")
        .arg(&cfg_path)
        .args(["--set", "seed=12", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let lines = fs::read_to_string(tmp.path().join("events.csv")).unwrap().lines().count();
    assert_eq!(lines, 3001);

    fs::write(&cfg_path, r#"{"n_zero": 3000}"#).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_pairemit"))
        .arg("simulate")
        .arg("--config")
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn full_run_writes_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let out = pairemit(
        tmp.path(),
        &["full", "--check", "--n0", "200000", "--set", "amplitude_params.grid.points=256", "--workers", "2"],
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}\n{}", String::from_utf8_lossy(&out.stderr));
    for f in [
        "events.csv",
        "hist_first.csv",
        "hist_second.csv",
        "hist_det1.csv",
        "hist_det2.csv",
        "hist_coincidence.csv",
        "fig1.csv",
        "fig1_overlay.csv",
        "report.json",
        "rates.json",
        "properties.json",
    ] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
    let report = read_report(tmp.path());
    assert!(report.cross_engine.is_some());
    assert!(report.rate_ratios.iter().any(|r| r.case == "prop4-free"));
    assert!(report.checks.iter().all(|c| c.passed));
    assert_eq!(report.config_echo.n0, 200_000);
}
