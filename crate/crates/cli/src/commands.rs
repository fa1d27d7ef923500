//! The `run` and `compare` commands, shared by the binary and the tests.

use std::fs;
use std::path::{Path, PathBuf};

use casched_core::channel::LogBase;
use casched_core::scenario::{RunMode, Scenario};
use casched_core::scheduler::{run_simulation, PolicyKind};

use crate::config::{self, load_scenario, ScenarioFile};
use crate::output::write_outputs;
use crate::CliError;

/// Command-line overrides applied on top of the scenario file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    /// Replaces the file's `n_frames`.
    pub frames: Option<u64>,
    /// Replaces the file's `log_base`.
    pub log_base: Option<LogBase>,
    /// Replaces the file's `kkt_stop_tol` (early stop once stationary).
    pub kkt_tol: Option<f64>,
}

impl Overrides {
    fn apply(&self, scenario: &mut Scenario) {
        if let Some(frames) = self.frames {
            scenario.n_frames = frames;
        }
        if let Some(base) = self.log_base {
            scenario.log_base = base;
        }
        if let Some(tol) = self.kkt_tol {
            scenario.kkt_stop_tol = Some(tol);
        }
    }
}

/// What `run` produced, for the caller to print.
#[derive(Debug)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub policy: PolicyKind,
    pub total_log_utility: f64,
    pub warnings: Vec<String>,
}

/// What `compare` produced: one `(policy label, total log-utility)` row per
/// policy, in the order they ran.
#[derive(Debug)]
pub struct CompareReport {
    pub out_dir: PathBuf,
    pub rows: Vec<(&'static str, f64)>,
    pub warnings: Vec<String>,
}

fn resolve_out_dir(cli_out: Option<PathBuf>, file: &ScenarioFile) -> PathBuf {
    cli_out
        .or_else(|| file.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn make_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads a scenario, runs one policy, and writes the artifact set.
///
/// The policy comes from `--policy` when given, otherwise from the file's
/// `run_mode` (a `compare` file defaults to the UPF policy here).
pub fn cmd_run(
    scenario_path: &Path,
    policy_word: Option<&str>,
    out: Option<PathBuf>,
    overrides: Overrides,
) -> Result<RunReport, CliError> {
    let (mut scenario, file) = load_scenario(scenario_path)?;
    overrides.apply(&mut scenario);
    let policy = match policy_word {
        Some(word) => config::parse_policy(word).ok_or(CliError::BadChoice {
            what: "policy",
            got: word.to_owned(),
            expected: "upf, pf, pf-weighted",
        })?,
        None => match scenario.run_mode {
            RunMode::Single(p) => p,
            RunMode::Compare => PolicyKind::Upf,
        },
    };
    let out_dir = resolve_out_dir(out, &file);
    let result = run_simulation(&scenario, policy)?;
    make_dir(&out_dir)?;
    write_outputs(&out_dir, &scenario.name, &result)?;
    Ok(RunReport {
        out_dir,
        policy,
        total_log_utility: result.total_log_utility,
        warnings: result.warnings,
    })
}

/// All three policies the comparison runs, in emission order.
pub const COMPARED_POLICIES: [PolicyKind; 3] = [
    PolicyKind::Upf,
    PolicyKind::TraditionalPf { weighted: true },
    PolicyKind::TraditionalPf { weighted: false },
];

/// Loads a scenario and runs the UPF policy plus both proportional-fair
/// baselines on identical inputs; artifacts land in one subdirectory per
/// policy, with a side-by-side `comparison.csv` at the top.
pub fn cmd_compare(
    scenario_path: &Path,
    out: Option<PathBuf>,
    overrides: Overrides,
) -> Result<CompareReport, CliError> {
    let (mut scenario, file) = load_scenario(scenario_path)?;
    overrides.apply(&mut scenario);
    let out_dir = resolve_out_dir(out, &file);
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for policy in COMPARED_POLICIES {
        let result = run_simulation(&scenario, policy)?;
        let policy_dir = out_dir.join(policy.label());
        make_dir(&policy_dir)?;
        write_outputs(&policy_dir, &scenario.name, &result)?;
        rows.push((policy.label(), result.total_log_utility));
        if warnings.is_empty() {
            warnings = result.warnings;
        }
    }
    let mut table = String::from("policy,total_log_utility\n");
    for (label, total) in &rows {
        table.push_str(&format!("{label},{}\n", crate::output::fmt_sig(*total)));
    }
    let table_path = out_dir.join("comparison.csv");
    fs::write(&table_path, table).map_err(|source| CliError::Write {
        path: table_path.clone(),
        source,
    })?;
    Ok(CompareReport {
        out_dir,
        rows,
        warnings,
    })
}
