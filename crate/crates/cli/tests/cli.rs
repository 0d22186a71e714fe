//! End-to-end tests of the `robomag` binary: outputs, exit codes and
//! input validation.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robomag"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).expect("utf-8 stderr")
}

fn ok(args: &[&str]) -> Output {
    let o = run(args);
    assert!(o.status.success(), "{args:?} failed: {}", stderr(&o));
    o
}

/// Header and numeric rows of a CSV artefact, skipping `#` lines.
fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines
        .next()
        .expect("header")
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (header, rows)
}

fn json(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).expect("json output")
}

fn column(header: &[String], name: &str) -> usize {
    header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name} in {header:?}"))
}

#[test]
fn scan_single_point_grid_has_one_row() {
    let o = ok(&["scan", "--grid", "1"]);
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(
        header,
        [
            "alpha_y_deg",
            "alpha_z_deg",
            "Bx_mT",
            "By_mT",
            "Bz_mT",
            "angular_error_deg",
            "order_index"
        ]
    );
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][6], "0");
}

#[test]
fn scan_full_grid_orders_meander_and_reports_mean() {
    let o = ok(&["scan", "--snap"]);
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 361);
    let order = column(&header, "order_index");
    let idx: Vec<usize> = rows.iter().map(|r| r[order].parse().unwrap()).collect();
    assert!(idx.windows(2).all(|w| w[1] > w[0]));

    let err = column(&header, "angular_error_deg");
    let mean = rows
        .iter()
        .map(|r| r[err].parse::<f64>().unwrap())
        .sum::<f64>()
        / rows.len() as f64;
    let summary = stderr(&o);
    let printed: f64 = summary
        .split("mean angular error ")
        .nth(1)
        .and_then(|s| s.split_whitespace().next())
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| panic!("no mean in {summary:?}"));
    assert!(
        (printed - mean).abs() <= 1e-9 * mean.max(1.0),
        "printed {printed} vs recomputed {mean}"
    );
}

#[test]
fn scan_si_units_change_columns_and_values() {
    let lab = csv_rows(&stdout(&ok(&["scan", "--grid", "2"])));
    let si = csv_rows(&stdout(&ok(&["--units", "si", "scan", "--grid", "2"])));
    assert_eq!(si.0[2], "Bx_T");
    for (a, b) in lab.1.iter().zip(&si.1) {
        let (x, y): (f64, f64) = (a[2].parse().unwrap(), b[2].parse().unwrap());
        assert!((x * 1e-3 - y).abs() <= 1e-12 * x.abs().max(1.0));
    }
}

#[test]
fn scan_taught_poses() {
    let o = ok(&["scan", "--taught", &fixture("taught_poses.csv")]);
    let (_, rows) = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 9);
}

#[test]
fn scan_rejects_missing_config() {
    let o = run(&["--config", "/nonexistent/run.toml", "scan"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn calibrate_fixture_recovers_offsets() {
    let v = json(&ok(&[
        "calibrate",
        "--input",
        &fixture("calibration_arc.csv"),
    ]));
    let dy = v["delta_alpha_y_deg"].as_f64().expect("delta_alpha_y_deg");
    assert!((dy - 15.0).abs() < 0.5, "{v}");
    let dz: Vec<f64> = v["delta_alpha_z_deg"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    for (got, want) in dz.iter().zip([1.0, 2.0, 3.0]) {
        assert!((got - want).abs() < 0.5, "{dz:?}");
    }
}

#[test]
fn calibrate_input_errors_exit_2() {
    assert_eq!(
        run(&["calibrate", "--input", "/nonexistent.csv"])
            .status
            .code(),
        Some(2)
    );
    // a file with the wrong columns
    assert_eq!(
        run(&["calibrate", "--input", &fixture("trajectory_1.csv")])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn schedule_ramp() {
    let o = ok(&["schedule", "--from", "0.5", "--to", "10"]);
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 20);
    let d = column(&header, "distance_mm");
    let dist: Vec<f64> = rows.iter().map(|r| r[d].parse().unwrap()).collect();
    assert!(
        dist.windows(2).all(|w| w[1] <= w[0]),
        "distances shrink as the target grows"
    );
    assert_eq!(
        run(&["schedule", "--from", "0.5", "--to", "10", "--count", "0"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn partition_counts_walled_fixture() {
    let o = ok(&[
        "--config",
        &fixture("walled/run.toml"),
        "partition",
        "--grid",
        "10",
    ]);
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 100);
    let s = column(&header, "status");
    let collisions = rows.iter().filter(|r| r[s] == "Collision").count();
    assert!(collisions > 0);
}

#[test]
fn replace_in_empty_environment_is_identity() {
    let v = json(&ok(&["replace", "--alpha-y", "30", "--alpha-z", "20"]));
    assert_eq!(v["status"], "Identity");
    assert_eq!(v["similarity"].as_f64(), Some(1.0));
}

#[test]
fn replace_walled_pose_reaches_similarity() {
    let v = json(&ok(&[
        "--config",
        &fixture("walled/run.toml"),
        "replace",
        "--alpha-y",
        "50",
        "--alpha-z",
        "40",
    ]));
    assert_eq!(v["status"], "Replaced");
    assert!(v["similarity"].as_f64().unwrap() >= 0.95, "{v}");
}

#[test]
fn replace_without_free_space_exits_1_with_json() {
    let o = run(&[
        "--config",
        &fixture("walled/run.toml"),
        "replace",
        "--alpha-y",
        "50",
        "--alpha-z",
        "40",
        "--max-steps",
        "1",
        "--step",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["status"], "NoReachableDisplacement");
}

#[test]
fn replace_grid_summary() {
    let v = json(&ok(&[
        "--config",
        &fixture("walled/run.toml"),
        "replace",
        "--grid",
        "10",
    ]));
    let s = &v["summary"];
    assert!(s["forbidden"].as_u64().unwrap() > 0);
    assert_eq!(
        s["similarity_at_least_0_95"],
        s["far_field_satisfied_or_failed"]
    );
}

#[test]
fn odmr_synthesis_and_fit_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let spectrum: PathBuf = dir.path().join("spectrum.csv");
    ok(&["odmr", "--bx", "2", "--out", &spectrum.to_string_lossy()]);
    let v = json(&ok(&["odmr", "--fit", &spectrum.to_string_lossy()]));
    // the default NV axis is world x: splitting ≈ 2 γe B for a 2 mT axial field
    let lo = v["f_minus_MHz"].as_f64().expect("f_minus_MHz");
    let hi = v["f_plus_MHz"].as_f64().expect("f_plus_MHz");
    assert!(((hi - lo) - 2.0 * 28.025 * 2.0).abs() < 1.0, "{v}");
}

#[test]
fn odmr_rejects_bad_linewidth() {
    assert_eq!(run(&["odmr", "--linewidth", "0"]).status.code(), Some(2));
}

#[test]
fn fit_nv_recovers_trajectory_axis() {
    let v = json(&ok(&["fit-nv", "--input", &fixture("trajectory_1.csv")]));
    let ay = v["alpha_y_nv_deg"].as_f64().unwrap();
    let az = v["alpha_z_nv_deg"].as_f64().unwrap();
    assert!((ay - 97.6).abs() < 1.0 && (az - 64.1).abs() < 1.0, "{v}");
}

#[test]
fn fit_nv_exit_codes() {
    assert_eq!(
        run(&["fit-nv", "--input", &fixture("trajectory_short.csv")])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&[
            "fit-nv",
            "--input",
            &fixture("trajectory_constant_gamma.csv")
        ])
        .status
        .code(),
        Some(1)
    );
}

#[test]
fn replay_without_provenance_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("plain.csv");
    std::fs::write(&plain, "a,b\n1,2\n").unwrap();
    assert_eq!(
        run(&["--replay", &plain.to_string_lossy()]).status.code(),
        Some(2)
    );
}

#[test]
fn seed_changes_noisy_output_only_through_the_seed() {
    let a = stdout(&ok(&[
        "--seed",
        "5",
        "scan",
        "--grid",
        "3",
        "--hall-noise",
        "0.1",
    ]));
    let b = stdout(&ok(&[
        "--seed",
        "5",
        "scan",
        "--grid",
        "3",
        "--hall-noise",
        "0.1",
    ]));
    let c = stdout(&ok(&[
        "--seed",
        "6",
        "scan",
        "--grid",
        "3",
        "--hall-noise",
        "0.1",
    ]));
    assert_eq!(a, b);
    assert_ne!(csv_rows(&a).1, csv_rows(&c).1);
}
