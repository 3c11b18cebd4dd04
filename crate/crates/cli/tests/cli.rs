//! End-to-end checks of the `chenc` binary: flag parsing, output
//! formats, and exit codes. Heavy pipeline runs live in the core
//! acceptance suite; these stay fast.

use std::process::{Command, Output};

fn chenc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chenc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn buchstab_eval_prints_closed_form_value() {
    let out = chenc(&["buchstab", "eval", "--u", "2.5"]);
    assert!(out.status.success());
    let v: f64 = stdout(&out).trim().parse().unwrap();
    assert!((v - 0.5621860432432657).abs() < 1e-6);
}

#[test]
fn buchstab_eval_below_domain_is_usage_error() {
    let out = chenc(&["buchstab", "eval", "--u", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("domain"));
}

#[test]
fn buchstab_table_row_count() {
    let out = chenc(&[
        "buchstab", "table", "--from", "1", "--to", "10", "--step", "0.01",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("u,omega_spline,omega_ode,abs_diff"));
    assert_eq!(lines.count(), 901);
}

#[test]
fn buchstab_table_rejects_bad_flags() {
    let out = chenc(&[
        "buchstab", "table", "--from", "5", "--to", "1", "--step", "0.01",
    ]);
    assert_eq!(out.status.code(), Some(2));
    // unknown flag is a clap usage error, also 2
    let out = chenc(&["buchstab", "table", "--nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn goldbach_count_matches_published_list() {
    let out = chenc(&["goldbach", "count", "--n", "90"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "9");
}

#[test]
fn goldbach_count_odd_is_usage_error() {
    let out = chenc(&["goldbach", "count", "--n", "91"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn goldbach_c0_value() {
    let out = chenc(&["goldbach", "c0"]);
    assert!(out.status.success());
    let v: f64 = stdout(&out).trim().parse().unwrap();
    assert!((v - 0.66016).abs() < 5e-5, "C_0 = {v}");
}

#[test]
fn goldbach_comet_csv_shape() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("comet.csv");
    let out = chenc(&[
        "goldbach",
        "comet",
        "--max",
        "120",
        "--filter",
        "12p",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "N,D,two_theta,color_class");
    let ns: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ns, vec!["24", "36", "60", "84"]);
}

#[test]
fn goldbach_theta_power_of_two() {
    let out = chenc(&["goldbach", "theta", "--n", "1024"]);
    assert!(out.status.success());
    let v: f64 = stdout(&out).trim().parse().unwrap();
    let expect = 0.66016 * 1024.0 / 1024f64.ln().powi(2);
    assert!((v - expect).abs() < 1e-3, "theta = {v}, expect ~{expect}");
}

#[test]
fn chen_solve_rejects_unknown_grid() {
    let out = chenc(&["chen", "solve", "--grid", "ninety"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn chen_solve_rejects_published_b_on_custom_grid() {
    let out = chenc(&[
        "chen",
        "solve",
        "--grid",
        "custom:12",
        "--b-source",
        "wu-published",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn wu_psi2_requires_row_or_params() {
    let out = chenc(&["wu", "psi2"]);
    assert_eq!(out.status.code(), Some(2));
    // a Psi_1 row has no k parameters
    let out = chenc(&["wu", "psi2", "--row", "7"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn i2_upper_flag_validated() {
    let out = chenc(&["wu", "psi2", "--row", "1", "--i2-upper", "20"]);
    assert_eq!(out.status.code(), Some(2));
}
