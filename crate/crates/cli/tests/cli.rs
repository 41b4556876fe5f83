use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mirrorport_cli::commands::ReadoutReport;
use mirrorport_cli::Summary;

fn fig2_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/fig2.json")
}

fn fig2_text() -> String {
    std::fs::read_to_string(fig2_path()).unwrap()
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mirrorport"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn curve_files_have_the_documented_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["curve"], &fig2_path(), dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let csv = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "theta_t,F_nbar_0,F_nbar_1,F_nbar_10,F_nbar_1000"
    );
    let first: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert_eq!(first[0], 0.0);
    for (f, n) in first[1..].iter().zip([0.0, 1.0, 10.0, 1000.0]) {
        assert!((f - 1.0 / (2.0 + n)).abs() < 1e-12);
    }
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2001);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
    assert!(rows
        .iter()
        .flat_map(|r| &r[1..])
        .all(|&f| f > 0.0 && f <= 1.0));
    assert!((rows[2000][0] - std::f64::consts::TAU).abs() < 1e-9);

    let text = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
    let summary: Summary = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string_pretty(&summary).unwrap() + "\n", text);
    for o in &summary.occupations {
        assert!((o.f_max - 0.85).abs() <= 0.02);
        assert!((o.n_eff_min - 0.17).abs() <= 0.02);
    }
    assert!(dir.path().join("run_meta.json").exists());
}

#[test]
fn periods_and_grid_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_mirrorport"))
        .args([
            "curve",
            "--grid",
            "200",
            "--periods",
            "2",
            "--no-heterodyne",
            "--config",
        ])
        .arg(fig2_path())
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 401);
    let summary: Summary =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary.curve_scheme, mirrorport::Scheme::TracedOut);
}

#[test]
fn missing_field_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &fig2_text().replace("\"mass_kg\": 1e-10,", ""));
    let out = run(&["couplings"], &config, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mass_kg"));
}

#[test]
fn unreadable_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["couplings"], &dir.path().join("absent.json"), dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out = run(
        &["curve", "--grid", "100"],
        &fig2_path(),
        &blocker.join("sub"),
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn corrupted_theta_fails_the_invariant_gate() {
    let dir = tempfile::tempdir().unwrap();
    let text = fig2_text().replace(
        "\"sweep\"",
        "\"couplings_override\": {\"chi_rad_per_s\": 1.0, \"theta_rad_per_s\": 1.5, \"big_theta_rad_per_s\": 1.2},\n  \"sweep\"",
    );
    let config = write_config(dir.path(), &text);
    let out = run(&["verify"], &config, dir.path());
    assert_eq!(out.status.code(), Some(2));
    let report = std::fs::read_to_string(dir.path().join("verify.txt")).unwrap();
    assert!(
        report
            .lines()
            .any(|l| l.starts_with("FAIL couplings_invariant")),
        "{report}"
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("couplings_invariant"));
}

#[test]
fn consistent_moderate_couplings_pass_every_gate() {
    let dir = tempfile::tempdir().unwrap();
    let text = fig2_text().replace(
        "\"sweep\"",
        "\"couplings_override\": {\"chi_rad_per_s\": 1.0, \"theta_rad_per_s\": 1.5},\n  \"sweep\"",
    );
    let config = write_config(dir.path(), &text);
    let out = run(&["verify"], &config, dir.path());
    let report = std::fs::read_to_string(dir.path().join("verify.txt")).unwrap();
    assert_eq!(out.status.code(), Some(0), "{report}");
    assert!(report.lines().filter(|l| l.starts_with("PASS")).count() >= 9);
}

#[test]
fn reference_verify_reports_every_gate() {
    let dir = tempfile::tempdir().unwrap();
    run(&["verify"], &fig2_path(), dir.path());
    let report = std::fs::read_to_string(dir.path().join("verify.txt")).unwrap();
    for gate in [
        "couplings_invariant",
        "ode_residual",
        "metric_preservation",
        "group_property",
        "physicality",
        "fidelity_identity",
        "classical_anchor",
        "no_heterodyne_bound",
    ] {
        assert!(
            report
                .lines()
                .any(|l| l.starts_with("PASS") && l.contains(gate)),
            "{gate}: {report}"
        );
    }
    assert!(report.contains("ode_vs_closed_form"));
}

#[test]
fn couplings_at_zero_temperature() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["couplings"], &fig2_path(), dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("couplings.json")).unwrap())
            .unwrap();
    assert_eq!(report["nbar_at_temperature"].as_f64(), Some(0.0));
    let chi = report["chi_rad_per_s"].as_f64().unwrap();
    assert!((chi / 5e5 - 1.0).abs() <= 0.2);
    assert!(report["regime_warnings"].as_array().unwrap().is_empty());
}

#[test]
fn readout_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["readout"], &fig2_path(), dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report: ReadoutReport =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("readout.json")).unwrap())
            .unwrap();
    assert!(report.quality_passed && report.readout_quality > 10.0);
    assert!((report.times[0].theta_t - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    let last = report.windows.iter().find(|w| w.nbar == 1000.0).unwrap();
    assert!((last.decoherence_window_s.unwrap() - 1e-3).abs() < 1e-15);
    assert_eq!(report.windows[0].decoherence_window_s, None);
}
