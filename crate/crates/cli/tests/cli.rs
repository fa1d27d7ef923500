//! End-to-end checks of the command layer: scenario round-trips, precise
//! error reporting, deterministic artifacts, and the emitted file schemas.

use std::fs;
use std::path::Path;
use std::process::Command;

use casched_cli::{cmd_compare, cmd_run, load_scenario, save_scenario, ConfigError, Overrides};
use casched_core::scenario::RunMode;
use casched_core::scheduler::PolicyKind;
use tempfile::TempDir;

fn demo_scenario_text() -> &'static str {
    r#"
name = "demo"
loss_threshold_db = 128.0
n_frames = 400
run_mode = "upf"

[channel]
ref_distance_m = 1.0
pathloss_exponent = 3.5
noise_power_w = 4.0e-15

[[carriers]]
id = 1
freq_hz = 2.0e9
total_power_w = 10.0
n_rbs = 6
rb_bandwidth_mhz = 0.18

[[carriers]]
id = 2
freq_hz = 0.9e9
total_power_w = 12.0
n_rbs = 5
rb_bandwidth_mhz = 0.18

[[users]]
id = 1
distance_m = 40.0
utility = { sigmoidal = { a = 3.0, b = 4.0 } }

[[users]]
id = 2
distance_m = 90.0
utility = { logarithmic = { k = 2.0, r_max = 30.0 } }

[[users]]
id = 3
distance_m = 150.0
pf_weight = 2.0
utility = { logarithmic = { k = 0.8, r_max = 50.0 } }
"#
}

fn write_demo(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("demo.toml");
    fs::write(&path, demo_scenario_text()).unwrap();
    path
}

#[test]
fn scenario_round_trips_through_save_and_load() {
    let tmp = TempDir::new().unwrap();
    let path = write_demo(tmp.path());
    let (scenario, file) = load_scenario(&path).unwrap();
    assert_eq!(scenario.run_mode, RunMode::Single(PolicyKind::Upf));
    assert_eq!(scenario.users[2].pf_weight, 2.0);
    assert!(file.output_dir.is_none());

    let saved = tmp.path().join("resaved.toml");
    save_scenario(&saved, &scenario, None).unwrap();
    let (reloaded, _) = load_scenario(&saved).unwrap();
    assert_eq!(scenario, reloaded);
}

#[test]
fn missing_utility_field_is_named_in_the_error() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("broken.toml");
    fs::write(
        &path,
        demo_scenario_text().replace(
            "utility = { logarithmic = { k = 2.0, r_max = 30.0 } }",
            "utility = { logarithmic = { k = 2.0 } }",
        ),
    )
    .unwrap();
    let err = load_scenario(&path).unwrap_err();
    let message = err.to_string();
    assert!(
        matches!(err, ConfigError::Parse { .. }) && message.contains("r_max"),
        "error does not name the missing field: {message}"
    );
}

#[test]
fn invalid_sigmoid_parameter_is_reported_with_the_user() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("broken.toml");
    fs::write(
        &path,
        demo_scenario_text().replace("{ a = 3.0, b = 4.0 }", "{ a = -1.0, b = 4.0 }"),
    )
    .unwrap();
    let err = load_scenario(&path).unwrap_err();
    let message = err.to_string();
    assert!(
        message.contains("user 1") && message.contains('a'),
        "unexpected error: {message}"
    );
}

#[test]
fn unknown_field_and_unknown_mode_are_rejected() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("broken.toml");
    fs::write(
        &path,
        demo_scenario_text().replace("n_frames = 400", "n_frames = 400\nframe_count = 7"),
    )
    .unwrap();
    assert!(load_scenario(&path).is_err());

    fs::write(
        &path,
        demo_scenario_text().replace("run_mode = \"upf\"", "run_mode = \"fastest\""),
    )
    .unwrap();
    let message = load_scenario(&path).unwrap_err().to_string();
    assert!(message.contains("run_mode"), "unexpected error: {message}");
}

#[test]
fn run_artifacts_are_byte_identical_across_reruns() {
    let tmp = TempDir::new().unwrap();
    let path = write_demo(tmp.path());
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    for out in [&out_a, &out_b] {
        cmd_run(&path, Some("upf"), Some(out.clone()), Overrides::default()).unwrap();
    }
    let mut names: Vec<String> = fs::read_dir(&out_a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "phi_1.csv",
            "phi_2.csv",
            "rates.csv",
            "summary.json",
            "trajectory_1.csv",
            "trajectory_2.csv"
        ]
    );
    for name in &names {
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn rates_csv_has_one_row_per_group_member_plus_per_user_totals() {
    let tmp = TempDir::new().unwrap();
    let path = write_demo(tmp.path());
    let out = tmp.path().join("out");
    cmd_run(&path, None, Some(out.clone()), Overrides::default()).unwrap();
    let rates = fs::read_to_string(out.join("rates.csv")).unwrap();
    let lines: Vec<&str> = rates.lines().collect();
    assert_eq!(lines[0], "user_id,carrier_id,stage_rate,aggregate_rate");
    // Demo: 2 GHz covers all 3 users at 128 dB, 0.9 GHz covers them too
    // (larger footprint), so both groups have 3 members; 3 users total.
    let expected_rows = 3 + 3 + 3;
    assert_eq!(lines.len(), 1 + expected_rows, "rows: {lines:#?}");
    let total_rows = lines.iter().filter(|l| l.contains(",all,")).count();
    assert_eq!(total_rows, 3);
}

#[test]
fn phi_csv_columns_sum_to_one() {
    let tmp = TempDir::new().unwrap();
    let path = write_demo(tmp.path());
    let out = tmp.path().join("out");
    cmd_run(&path, None, Some(out.clone()), Overrides::default()).unwrap();
    for carrier in [1, 2] {
        let text = fs::read_to_string(out.join(format!("phi_{carrier}.csv"))).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        let n_rbs = header.split(',').count() - 1;
        let mut sums = vec![0.0f64; n_rbs];
        for line in lines {
            for (j, cell) in line.split(',').skip(1).enumerate() {
                sums[j] += cell.parse::<f64>().unwrap();
            }
        }
        for (j, s) in sums.iter().enumerate() {
            assert!(
                (s - 1.0).abs() <= 1e-9,
                "carrier {carrier} rb_{} sums to {s}",
                j + 1
            );
        }
    }
}

#[test]
fn trajectory_csv_matches_schema_and_counts_frames() {
    let tmp = TempDir::new().unwrap();
    let path = write_demo(tmp.path());
    let out = tmp.path().join("out");
    cmd_run(&path, None, Some(out.clone()), Overrides { frames: Some(250), ..Default::default() })
        .unwrap();
    let text = fs::read_to_string(out.join("trajectory_1.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "frame,n,L_phi");
    assert_eq!(lines.len(), 1 + 250);
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!((first[0], first[1]), ("1", "2"));
    let last: Vec<&str> = lines[250].split(',').collect();
    assert_eq!((last[0], last[1]), ("250", "251"));
    // The late tail must be finite and parsable.
    let tail: f64 = last[2].parse().unwrap();
    assert!(tail.is_finite());
}

#[test]
fn compare_emits_per_policy_directories_and_a_table() {
    let tmp = TempDir::new().unwrap();
    let path = write_demo(tmp.path());
    let out = tmp.path().join("cmp");
    let report = cmd_compare(&path, Some(out.clone()), Overrides::default()).unwrap();
    assert_eq!(report.rows.len(), 3);
    assert_eq!(report.rows[0].0, "upf");
    for label in ["upf", "pf-weighted", "pf-equal"] {
        assert!(out.join(label).join("summary.json").is_file());
    }
    let table = fs::read_to_string(out.join("comparison.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "policy,total_log_utility");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("upf,"));
}

#[test]
fn binary_runs_and_reports_errors_with_nonzero_exit() {
    let tmp = TempDir::new().unwrap();
    let path = write_demo(tmp.path());
    let out = tmp.path().join("bin-out");
    let ok = Command::new(env!("CARGO_BIN_EXE_casched"))
        .args([
            "run",
            path.to_str().unwrap(),
            "--frames",
            "100",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(ok.status.success(), "stderr: {}", String::from_utf8_lossy(&ok.stderr));
    assert!(out.join("summary.json").is_file());
    let stdout = String::from_utf8_lossy(&ok.stdout);
    assert!(stdout.contains("total log-utility"), "stdout: {stdout}");

    let missing = Command::new(env!("CARGO_BIN_EXE_casched"))
        .args(["run", tmp.path().join("nope.toml").to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("error:"));

    let bad_policy = Command::new(env!("CARGO_BIN_EXE_casched"))
        .args(["run", path.to_str().unwrap(), "--policy", "round-robin"])
        .output()
        .unwrap();
    assert!(!bad_policy.status.success());
    assert!(String::from_utf8_lossy(&bad_policy.stderr).contains("policy"));
}

#[test]
fn log_base_and_kkt_tol_flags_change_the_run() {
    let tmp = TempDir::new().unwrap();
    let path = write_demo(tmp.path());
    let out_2 = tmp.path().join("base2");
    let out_e = tmp.path().join("basee");
    let ok = Command::new(env!("CARGO_BIN_EXE_casched"))
        .args(["run", path.to_str().unwrap(), "--out", out_2.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(ok.status.success());
    let ok = Command::new(env!("CARGO_BIN_EXE_casched"))
        .args([
            "run",
            path.to_str().unwrap(),
            "--log-base",
            "e",
            "--out",
            out_e.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(ok.status.success());
    // Natural-log rates are ln(2) times the base-2 rates, so artifacts differ.
    let a = fs::read(out_2.join("rates.csv")).unwrap();
    let b = fs::read(out_e.join("rates.csv")).unwrap();
    assert_ne!(a, b);

    // An aggressive early-stop tolerance must shorten at least one stage.
    let out_tol = tmp.path().join("tol");
    let ok = Command::new(env!("CARGO_BIN_EXE_casched"))
        .args([
            "run",
            path.to_str().unwrap(),
            "--frames",
            "200000",
            "--kkt-tol",
            "0.05",
            "--out",
            out_tol.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(ok.status.success(), "stderr: {}", String::from_utf8_lossy(&ok.stderr));
    let summary = fs::read_to_string(out_tol.join("summary.json")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&summary).unwrap();
    let frames: Vec<u64> = doc["stages"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["frames_run"].as_u64().unwrap())
        .collect();
    assert!(
        frames.iter().any(|f| *f < 200_000),
        "no stage stopped early: {frames:?}"
    );
}
