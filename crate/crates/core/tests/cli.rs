//! End-to-end runs of the `angiomet` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use angiomet::runner::CSV_HEADER;

const SHORT: &str = "\
[growth]
primary_x0_mm3 = 200

[discretization]
t_end_day = 2
dt_day = 0.05
";

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_angiomet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_writes_identical_csv_twice() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "short.cfg", SHORT);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let o = bin(&["simulate", "--config", s(&cfg), "--output", s(out), "--seedless"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (ta, tb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert_eq!(lines.count(), 41);
}

#[test]
fn simulate_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "short.cfg", SHORT);
    let o = bin(&["simulate", "--config", s(&cfg)]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with(CSV_HEADER));
}

#[test]
fn empty_schedule_matches_no_therapy() {
    let dir = tempfile::tempdir().unwrap();
    let plain = write(dir.path(), "plain.cfg", SHORT);
    let empty = write(
        dir.path(),
        "empty.cfg",
        &format!("{SHORT}\n[therapy.aa]\nefficacy_per_day_mg = 0.66\nclearance_per_day = 1.7\ndose_mg = 20\ntimes =\n"),
    );
    let a = bin(&["simulate", "--config", s(&plain)]);
    let b = bin(&["simulate", "--config", s(&empty)]);
    assert!(a.status.success() && b.status.success(), "{}", String::from_utf8_lossy(&b.stderr));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn flags_override_the_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "short.cfg", SHORT);
    let base = bin(&["simulate", "--config", s(&cfg)]);
    let rect = bin(&["simulate", "--config", s(&cfg), "--quadrature", "rectangle"]);
    // spreading the birth profile needs a positive half-width
    assert_eq!(bin(&["simulate", "--config", s(&cfg), "--no-dirac"]).status.code(), Some(1));
    let spread = write(
        dir.path(),
        "spread.cfg",
        &SHORT.replace("[growth]\n", "[growth]\ndelta_theta_mm3 = 100\n"),
    );
    let wide = bin(&["simulate", "--config", s(&spread), "--no-dirac", "--data-mode", "point"]);
    assert!(base.status.success() && rect.status.success() && wide.status.success());
    assert_ne!(base.stdout, rect.stdout);
    assert_ne!(base.stdout, wide.stdout);
}

#[test]
fn configuration_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.cfg", "[growth]\nnot_a_key = 3\n");
    let neg = write(dir.path(), "neg.cfg", "[discretization]\ndt_day = -1\n");
    for cfg in [&bad, &neg] {
        let o = bin(&["simulate", "--config", s(cfg)]);
        assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(bin(&["simulate", "--config", "/nonexistent.cfg"]).status.code(), Some(1));
    assert_eq!(bin(&["simulate"]).status.code(), Some(1));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(1));
    let cfg = write(dir.path(), "short.cfg", SHORT);
    assert_eq!(bin(&["simulate", "--config", s(&cfg), "--seedless=3"]).status.code(), Some(1));
}

#[test]
fn check_passes_untreated_and_flags_inflow_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "short.cfg", SHORT);
    let o = bin(&["check", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));

    // a cytotoxic course drives the birth-side velocity outward
    let ct = write(
        dir.path(),
        "ct.cfg",
        &format!("{SHORT}\n[therapy.ct]\nefficacy_per_day_mg = 1\nclearance_per_day = 1\ndose_mg = 1\ntimes = 0.5\n"),
    );
    assert_eq!(bin(&["check", "--config", s(&ct)]).status.code(), Some(2));
    // simulate only warns about it
    let o = bin(&["simulate", "--config", s(&ct)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}

#[test]
fn compare_and_sweep_write_one_csv_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.cfg", SHORT);
    let b = write(
        dir.path(),
        "b.cfg",
        &format!("{SHORT}\n[therapy.aa]\nefficacy_per_day_mg = 0.66\nclearance_per_day = 1.7\ndose_mg = 20\ntimes = 0, 1\n"),
    );
    let out = dir.path().join("cmp");
    fs::create_dir(&out).unwrap();
    let o = bin(&["compare", "--config", s(&a), "--config", s(&b), "--output", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("a.csv").exists() && out.join("b.csv").exists());
    assert!(String::from_utf8_lossy(&o.stdout).contains("ranking (lowest final MI first): b, a"));
    assert_eq!(bin(&["compare", "--config", s(&a)]).status.code(), Some(1));

    let sw = dir.path().join("sweep");
    fs::create_dir(&sw).unwrap();
    let o = bin(&[
        "sweep", "--config", s(&b), "--param", "therapy.aa.dose_mg", "--values", "0,10,20", "--output", s(&sw),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert_eq!(fs::read_dir(&sw).unwrap().count(), 3);
    let bad = bin(&["sweep", "--config", s(&b), "--param", "growth.nope", "--values", "1"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn converge_reports_orders() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "smooth.cfg",
        "[growth]\nprimary_x0_mm3 = 200\ndelta_theta_mm3 = 100\n\
         [discretization]\nt_end_day = 1\ndt_day = 0.1\ndsigma_mm3 = 50\ndx_mm3 = 50\n\
         dirac = false\nrepartition = hat\nquadrature = rectangle\n",
    );
    let o = bin(&["converge", "--config", s(&cfg), "--levels", "3", "--reference", "16"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("order MI"));
    let o = bin(&["converge", "--config", s(&cfg), "--levels", "3", "--reference", "4"]);
    assert_eq!(o.status.code(), Some(1));
}
