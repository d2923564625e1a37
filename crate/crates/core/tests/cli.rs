use std::path::Path;
use std::process::{Command, Output};

use qhj::cli::{ResidueEntry, ScanRow, VerifyReport};
use qhj::quantize::SpectrumRow;

fn qhj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qhj"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn golden(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(path).unwrap()
}

/// Header and integer columns must match exactly; numeric cells within `tol`.
fn assert_table_matches(actual: &str, expected: &str, tol: f64) {
    let a: Vec<&str> = actual.lines().collect();
    let e: Vec<&str> = expected.lines().collect();
    assert_eq!(a.len(), e.len(), "row count\n{actual}");
    assert_eq!(a[0], e[0], "header");
    for (ra, re) in a.iter().zip(&e).skip(1) {
        let ca: Vec<&str> = ra.split(',').collect();
        let ce: Vec<&str> = re.split(',').collect();
        assert_eq!(ca.len(), ce.len());
        for (x, y) in ca.iter().zip(&ce) {
            match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(x), Ok(y)) => assert!((x - y).abs() <= tol, "{ra} vs {re}"),
                _ => assert_eq!(x, y, "{ra} vs {re}"),
            }
        }
    }
}

#[test]
fn spectrum_harmonic_matches_golden() {
    let o = qhj(&["spectrum", "--potential", "harmonic", "--levels", "3", "--methods", "qhj,wkb,closed"]);
    assert_eq!(code(&o), 0);
    assert_table_matches(&stdout(&o), &golden("harmonic_spectrum.csv"), 1e-9);
}

#[test]
fn spectrum_morse_matches_golden() {
    let o = qhj(&["spectrum", "--potential", "morse", "--params", "D=8,a=1", "--levels", "3"]);
    assert_eq!(code(&o), 0);
    assert_table_matches(&stdout(&o), &golden("morse_spectrum.csv"), 1e-9);
}

#[test]
fn spectrum_quartic_matches_golden() {
    let o = qhj(&["spectrum", "--potential", "quartic", "--levels", "5", "--methods", "qhj,oracle"]);
    assert_eq!(code(&o), 0);
    assert_table_matches(&stdout(&o), &golden("quartic_spectrum.csv"), 1e-9);
}

#[test]
fn harmonic_energy_columns_are_half_integers() {
    let o = qhj(&["spectrum", "--potential", "harmonic", "--levels", "3", "--methods", "qhj,wkb", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let rows: Vec<SpectrumRow> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        let exact = r.n as f64 + 0.5;
        assert!((r.e_qhj.unwrap() - exact).abs() < 1e-10);
        assert!((r.e_wkb.unwrap() - exact).abs() < 1e-10);
        assert_eq!(r.e_oracle, None);
        assert_eq!(r.node_count, Some(r.n));
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let paths = [dir.path().join("a.csv"), dir.path().join("b.csv")];
    for p in &paths {
        let o = qhj(&["spectrum", "--potential", "quartic", "--levels", "3", "--out", p.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
        assert!(o.stdout.is_empty());
    }
    let a = std::fs::read(&paths[0]).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, std::fs::read(&paths[1]).unwrap());
}

#[test]
fn json_round_trips_exactly() {
    let o = qhj(&["spectrum", "--potential", "morse", "--params", "D=8,a=1", "--levels", "2", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let rows: Vec<SpectrumRow> = serde_json::from_str(&text).unwrap();
    let again = serde_json::to_string_pretty(&rows).unwrap() + "\n";
    assert_eq!(again, text);
    let e1 = rows[1].e_qhj.unwrap();
    assert_eq!(e1, text.split("\"E_qhj\": ").nth(2).unwrap().split(',').next().unwrap().parse::<f64>().unwrap());
}

#[test]
fn missing_parameter_is_a_config_error_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = qhj(&["spectrum", "--potential", "morse", "--params", "D=8", "--levels", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(!out.exists());
    assert!(String::from_utf8_lossy(&o.stderr).contains("'a'"));
}

#[test]
fn config_errors_exit_2() {
    for args in [
        vec!["spectrum", "--potential", "sextic", "--levels", "1"],
        vec!["spectrum", "--potential", "harmonic", "--params", "omega=1,beta=2", "--levels", "1"],
        vec!["spectrum", "--potential", "harmonic"],
        vec!["spectrum", "--potential", "harmonic", "--levels", "1", "--methods", "exact"],
        vec!["spectrum", "--potential", "harmonic", "--levels", "1", "--hbar", "-1"],
        vec!["spectrum", "--potential", "harmonic", "--levels", "1", "--format", "xml"],
        vec!["verify", "--potential", "harmonic", "--margins", "0.9"],
        vec!["verify", "--potential", "harmonic", "--format", "csv"],
        vec!["bogus"],
    ] {
        assert_eq!(code(&qhj(&args)), 2, "{args:?}");
    }
}

#[test]
fn seedless_is_a_flag_without_value() {
    let ok = qhj(&["--seedless", "spectrum", "--potential", "harmonic", "--levels", "0", "--methods", "closed"]);
    assert_eq!(code(&ok), 0);
    let bad = qhj(&["--seedless=1", "spectrum", "--potential", "harmonic", "--levels", "0"]);
    assert_eq!(code(&bad), 2);
}

#[test]
fn levels_beyond_capacity_exit_3_with_partial_table() {
    let o = qhj(&["spectrum", "--potential", "morse", "--params", "D=8,a=1", "--levels", "4", "--methods", "qhj,closed"]);
    assert_eq!(code(&o), 3);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].ends_with(",error"));
    assert_eq!(lines.len(), 6);
    assert!(lines[1].starts_with("0,1.875,"));
    assert!(lines[5].starts_with("4,") && lines[5].contains("no bound state"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"potential": {"kind": "morse", "params": {"D": 8, "a": 1}}, "solver": {"hbar": 1.0}, "levels": 1, "methods": "closed"}"#,
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    let o = qhj(&["--config", c, "spectrum"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().nth(2).unwrap(), "1,,,,4.875,,,,,");
    let o = qhj(&["--config", c, "--hbar", "0.5", "spectrum", "--levels", "0"]);
    assert_eq!(code(&o), 0);
    // ω = a√(2D/m) = 4, χ = ℏω/4D
    assert_eq!(stdout(&o).lines().nth(1).unwrap(), "0,,,,0.96875,,,,,");

    std::fs::write(&cfg, r#"{"potential": {"kind": "harmonic"}, "level": 1, "extra": true}"#).unwrap();
    assert_eq!(code(&qhj(&["--config", c, "verify"])), 2);
    assert_eq!(code(&qhj(&["--config", "/nonexistent/run.json", "verify"])), 2);
}

#[test]
fn verify_reports_unit_action_for_first_excited_state() {
    let o = qhj(&["verify", "--potential", "harmonic", "--level", "1"]);
    assert_eq!(code(&o), 0);
    let r: VerifyReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((r.j_over_hbar.unwrap() - 1.0).abs() <= 1e-6);
    assert_eq!(r.n_est, Some(1));
    assert!(r.passed);

    let o = qhj(&["verify", "--potential", "harmonic", "--level", "0"]);
    let r: VerifyReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(r.j_over_hbar.unwrap().abs() <= 1e-10);
}

#[test]
fn verify_sweep_agrees_across_margins() {
    let o = qhj(&["verify", "--potential", "quartic", "--level", "2", "--margins", "1.2,1.4,1.6"]);
    assert_eq!(code(&o), 0);
    let r: VerifyReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r.sweep.len(), 6);
    let margins: Vec<f64> = r.sweep.iter().map(|s| s.margin).collect();
    assert_eq!(margins, [1.2, 1.2, 1.4, 1.4, 1.6, 1.6]);
    let js: Vec<f64> = r.sweep.iter().map(|s| s.j_over_hbar.unwrap()).collect();
    for j in &js {
        assert!((j - js[0]).abs() <= 1e-6);
    }
    assert!(r.max_sweep_deviation.unwrap() <= 1e-6);
}

#[test]
fn wkb_check_reports_minus_half_h() {
    let o = qhj(&["wkb-check", "--potential", "quartic", "--energies", "1"]);
    assert_eq!(code(&o), 0);
    let r: Vec<ResidueEntry> = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((r[0].value_re.unwrap() + std::f64::consts::PI).abs() <= 1e-8 * 2.0 * std::f64::consts::PI);

    let o = qhj(&["wkb-check", "--potential", "harmonic", "--hbar", "0.25"]);
    assert_eq!(code(&o), 0);
    let r: Vec<ResidueEntry> = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((r[0].value_re.unwrap() + 0.25 * std::f64::consts::PI).abs() <= 1e-9);
    assert!(r[0].passed);

    // below the well bottom there is nothing to enclose
    let o = qhj(&["wkb-check", "--potential", "harmonic", "--energies", "0.5,-1"]);
    assert_eq!(code(&o), 3);
    let r: Vec<ResidueEntry> = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(r[0].passed && !r[1].passed && r[1].error.is_some());
}

#[test]
fn ebk_two_dimensional_harmonic() {
    let o = qhj(&["ebk", "--coord", "harmonic:omega=1", "--coord", "harmonic:omega=2", "--qn", "2,1"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "coordinate,label,n,E,J_over_hbar,S_over_h,E_total");
    assert_eq!(lines[1], "0,q1,2,2.5,2,2.5,5.5");
    assert_eq!(lines[2], "1,q2,1,3,1,1.5,5.5");

    let o = qhj(&["ebk", "--coord", "harmonic:omega=1", "--coord", "harmonic:omega=2", "--qn", "0,0", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["energy"].as_f64().unwrap() - 1.5).abs() <= 1e-10);
    for c in v["coordinates"].as_array().unwrap() {
        assert!(c["J_over_hbar"].as_f64().unwrap().abs() <= 1e-10);
    }
}

#[test]
fn ebk_validation() {
    let base = ["ebk", "--coord", "harmonic", "--coord", "harmonic:omega=2"];
    for qn in ["2,-1", "1", "1,x"] {
        let mut args = base.to_vec();
        args.extend(["--qn", qn]);
        assert_eq!(code(&qhj(&args)), 2, "{qn}");
    }
    assert_eq!(code(&qhj(&["ebk", "--coord", "harmonic", "--qn", "0"])), 2);
    // a Morse coordinate with four bound states has no fifth level
    let o = qhj(&["ebk", "--coord", "harmonic", "--coord", "morse:D=8,a=1", "--qn", "0,4"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("q2"));
}

#[test]
fn hbar_scan_rows() {
    let o = qhj(&["hbar-scan", "--potential", "quartic", "--halvings", "4", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let rows: Vec<ScanRow> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), 5);
    for w in rows.windows(2) {
        assert_eq!(w[1].hbar, 0.5 * w[0].hbar);
        assert!(w[1].abs_delta.unwrap() < w[0].abs_delta.unwrap());
    }

    let o = qhj(&["hbar-scan", "--potential", "harmonic", "--level", "2", "--halvings", "3"]);
    assert_eq!(code(&o), 0);
    for line in stdout(&o).lines().skip(1) {
        let delta: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(delta <= 1e-8, "{line}");
    }

    let o = qhj(&["hbar-scan", "--potential", "harmonic", "--halvings", "0"]);
    assert_eq!(stdout(&o).lines().count(), 2);
}
