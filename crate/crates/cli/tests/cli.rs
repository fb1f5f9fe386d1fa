use std::path::Path;
use std::process::{Command, Output};

use bh_drive::analytic::omega_star;
use bh_drive::experiment::format_value;

fn bhdrive(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bhdrive")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Column line and data rows, without the `#` header.
fn body(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let lines = body(csv);
    let idx = lines[0].split(',').position(|c| c == name).expect("column present");
    lines[1..].iter().map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

const SMALL: [&str; 8] = ["--sites", "3", "--omega-min", "0", "--omega-max", "30", "--omega-step", "2.5"];

#[test]
fn occupation_sweep_has_one_row_per_grid_point() {
    let out = bhdrive(&[&["occupation"], &SMALL[..]].concat());
    assert_eq!(out.status.code(), Some(0));
    let csv = stdout(&out);
    let lines = body(&csv);
    assert_eq!(lines[0], "omega,n_3,n_e_3,n_g_3,energy,branch,status");
    assert_eq!(lines.len() - 1, 13);
    assert!(lines[1..].iter().all(|l| l.ends_with(",ok")));
    // the staircase has begun by Omega = 30 (threshold at 20)
    let n3: Vec<f64> = column(&csv, "n_3").iter().map(|s| s.parse().unwrap()).collect();
    assert!((n3[0] - 1.0).abs() < 0.05 && (n3[12] - 2.0).abs() < 0.1, "{n3:?}");
}

#[test]
fn output_is_deterministic_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for (i, threads) in ["1", "1", "3"].iter().enumerate() {
        let path = dir.path().join(format!("run{i}.csv"));
        let p = path.to_str().unwrap();
        let out = bhdrive(&[&["parity"], &SMALL[..], &["--threads", threads, "--out", p]].concat());
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        files.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(files[0], files[2]);
}

#[test]
fn threshold_column_matches_analytic_formula() {
    let out = bhdrive(&["thresholds", "--sites", "5", "--interaction", "20", "--detuning", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = stdout(&out);
    let stars = column(&csv, "omega_star");
    assert_eq!(stars.len(), 4);
    for (n, s) in stars.iter().enumerate() {
        assert_eq!(s, &format_value(omega_star(n + 1, 20.0, 10.0).unwrap()));
    }
}

#[test]
fn sweep_header_records_thresholds() {
    let out = bhdrive(&[&["entropy", "--cut", "1"], &SMALL[..]].concat());
    let csv = stdout(&out);
    let expected = format!("# omega_star_1 = {}", format_value(20.0));
    assert!(csv.lines().any(|l| l == expected), "{csv}");
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.cfg",
        "# small gap sweep\nkind = gap\nsites = 3\ninteraction = 20\nomega-min = 0\nomega-max = 10\nomega-step = 5\n",
    );
    let from_file = stdout(&bhdrive(&["gap", "--config", &cfg]));
    assert!(from_file.contains("# u_e = 2.00000000000e1"));
    assert_eq!(body(&from_file).len() - 1, 3);

    let overridden = stdout(&bhdrive(&["gap", "--config", &cfg, "--interaction", "10", "--omega-step", "2.5"]));
    assert!(overridden.contains("# u_e = 1.00000000000e1"));
    assert_eq!(body(&overridden).len() - 1, 5);
}

#[test]
fn config_errors_exit_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(dir.path(), "bad.cfg", "kind = gap\nsites = 3\ncolour = blue\n");
    let out = bhdrive(&["gap", "--config", &unknown]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("colour"), "{err}");

    let negative = write(dir.path(), "neg.cfg", "kind = gap\nsites = 3\ninteraction = -1\n");
    assert_eq!(bhdrive(&["gap", "--config", &negative]).status.code(), Some(1));

    let missing = dir.path().join("absent.cfg");
    assert_eq!(bhdrive(&["gap", "--config", missing.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn usage_errors_exit_with_code_one() {
    assert_eq!(bhdrive(&["occupation", "--bogus"]).status.code(), Some(1));
    assert_eq!(bhdrive(&["occupation", "--sites", "0"]).status.code(), Some(1));
    assert_eq!(bhdrive(&["occupation", "--sites", "3", "--omega-step", "-1"]).status.code(), Some(1));
    assert_eq!(bhdrive(&["nonsense"]).status.code(), Some(1));
    assert_eq!(bhdrive(&["--help"]).status.code(), Some(0));
}

#[test]
fn unconverged_points_are_flagged_and_exit_two() {
    let out = bhdrive(&["gap", "--sites", "3", "--omega-max", "1", "--omega-step", "0.5", "--tol", "1e-300"]);
    assert_eq!(out.status.code(), Some(2));
    let csv = stdout(&out);
    let rows = &body(&csv)[1..];
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.starts_with(|c: char| c.is_ascii_digit()) && r.contains("\"error: ")));
}

#[test]
fn ramp_writes_time_series() {
    let out = bhdrive(&["ramp", "--sites", "2", "--ramp-rate", "2", "--t-final", "5", "--sample-interval", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = stdout(&out);
    let t = column(&csv, "t");
    assert_eq!(t.len(), 6);
    assert_eq!(t[5], format_value(5.0));
    for norm in column(&csv, "norm") {
        assert!((norm.parse::<f64>().unwrap() - 1.0).abs() < 1e-8);
    }
}
