//! Artifact writers. Every file is deterministic for a given result:
//! numbers are serialized to 12 significant digits, line endings are LF,
//! and iteration orders are fixed, so rerunning a scenario reproduces the
//! artifacts byte for byte.
//!
//! A single run emits into its directory:
//!
//! * `trajectory_<carrier>.csv` — columns `frame,n,L_phi`: the stage
//!   objective after each frame (`n` is the share-average counter, one
//!   ahead of `frame`).
//! * `rates.csv` — columns `user_id,carrier_id,stage_rate,aggregate_rate`;
//!   one row per user per carrier stage (aggregate empty), then one row per
//!   user with `carrier_id` `all` holding the final aggregate rate.
//! * `phi_<carrier>.csv` — the final share matrix, one row per group user.
//! * `summary.json` — scenario name, policy, objective totals, per-stage
//!   stationarity residuals, and per-user rates.

use std::fs;
use std::path::Path;

use casched_core::scheduler::{SimResult, StageResult};
use serde_json::{json, Value};

use crate::CliError;

/// Formats a number with 12 significant digits (scientific notation);
/// non-finite values become `inf`, `-inf`, or `nan`.
pub fn fmt_sig(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else if x.is_nan() {
        "nan".to_owned()
    } else if x > 0.0 {
        "inf".to_owned()
    } else {
        "-inf".to_owned()
    }
}

/// JSON value for a number rounded to 12 significant digits; non-finite
/// values are encoded as the strings `fmt_sig` produces.
pub fn json_number(x: f64) -> Value {
    if x.is_finite() {
        let rounded: f64 = fmt_sig(x).parse().expect("formatted float reparses");
        serde_json::Number::from_f64(rounded)
            .map(Value::Number)
            .unwrap_or_else(|| Value::String(fmt_sig(x)))
    } else {
        Value::String(fmt_sig(x))
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn trajectory_csv(stage: &StageResult) -> String {
    let mut out = String::from("frame,n,L_phi\n");
    for (m, l) in stage.trajectory.iter().enumerate() {
        let frame = m + 1;
        out.push_str(&format!("{frame},{},{}\n", frame + 1, fmt_sig(*l)));
    }
    out
}

fn phi_csv(stage: &StageResult) -> String {
    let n_rbs = stage.rate_table.first().map_or(0, Vec::len);
    let mut out = String::from("user_id");
    for j in 1..=n_rbs {
        out.push_str(&format!(",rb_{j}"));
    }
    out.push('\n');
    for (row, uid) in stage.phi.iter().zip(&stage.user_ids) {
        out.push_str(&uid.to_string());
        for share in row {
            out.push(',');
            out.push_str(&fmt_sig(*share));
        }
        out.push('\n');
    }
    out
}

fn rates_csv(result: &SimResult) -> String {
    let mut out = String::from("user_id,carrier_id,stage_rate,aggregate_rate\n");
    for stage in &result.stages {
        for (uid, rate) in stage.user_ids.iter().zip(&stage.stage_rate) {
            out.push_str(&format!("{uid},{},{},\n", stage.carrier_id, fmt_sig(*rate)));
        }
    }
    for (uid, rate) in &result.aggregate_rate {
        out.push_str(&format!("{uid},all,,{}\n", fmt_sig(*rate)));
    }
    out
}

fn summary_json(scenario_name: &str, result: &SimResult) -> String {
    let stages: Vec<Value> = result
        .stages
        .iter()
        .map(|s| {
            json!({
                "carrier_id": s.carrier_id,
                "coverage_radius_m": json_number(s.coverage_radius_m),
                "user_ids": s.user_ids,
                "frames_run": s.frames_run,
                "kkt_residual": json_number(s.kkt_residual),
                "final_objective": json_number(s.final_objective),
                "carried": s.carried.iter().map(|r| json_number(*r)).collect::<Vec<_>>(),
                "stage_rate": s.stage_rate.iter().map(|r| json_number(*r)).collect::<Vec<_>>(),
            })
        })
        .collect();
    let aggregate: Vec<Value> = result
        .aggregate_rate
        .iter()
        .map(|(uid, rate)| json!({"user_id": uid, "rate": json_number(*rate)}))
        .collect();
    let doc = json!({
        "scenario": scenario_name,
        "policy": result.policy.label(),
        "total_log_utility": json_number(result.total_log_utility),
        "aggregate_rate": aggregate,
        "stages": stages,
        "warnings": result.warnings,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("summary serializes");
    text.push('\n');
    text
}

/// Writes the full artifact set for one simulation result into `dir`
/// (which must already exist).
pub fn write_outputs(dir: &Path, scenario_name: &str, result: &SimResult) -> Result<(), CliError> {
    for stage in &result.stages {
        write_file(
            &dir.join(format!("trajectory_{}.csv", stage.carrier_id)),
            &trajectory_csv(stage),
        )?;
        write_file(
            &dir.join(format!("phi_{}.csv", stage.carrier_id)),
            &phi_csv(stage),
        )?;
    }
    write_file(&dir.join("rates.csv"), &rates_csv(result))?;
    write_file(&dir.join("summary.json"), &summary_json(scenario_name, result))?;
    Ok(())
}
