//! TOML scenario schema and its mapping onto the core types.
//!
//! Field names carry their units (`freq_hz`, `total_power_w`,
//! `distance_m`, `rb_bandwidth_mhz`) so files stay unambiguous. Rates are
//! in megabits per second throughout: a resource block's bandwidth is
//! given in MHz, which makes every rate the simulator reports Mbit/s.

use std::fs;
use std::path::{Path, PathBuf};

use casched_core::channel::{Carrier, ChannelModel, GainMode, LogBase};
use casched_core::grouping::UserEquipment;
use casched_core::scenario::{RunMode, Scenario, ScenarioError};
use casched_core::scheduler::PolicyKind;
use casched_core::utility::{Utility, UtilityError};
use serde::{Deserialize, Serialize};

/// Errors from reading, parsing, or validating a scenario file.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        source: Box<toml::de::Error>,
    },
    #[error("user {user}: {source}")]
    BadUtility { user: u32, source: UtilityError },
    #[error("{field} must be one of {expected}, got {got:?}")]
    BadChoice {
        field: &'static str,
        got: String,
        expected: &'static str,
    },
    #[error(transparent)]
    Invalid(#[from] ScenarioError),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot serialize scenario: {0}")]
    Serialize(#[from] toml::ser::Error),
}

/// On-disk scenario schema (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    /// Maximum tolerable path loss in dB; sets every carrier's footprint.
    pub loss_threshold_db: f64,
    pub n_frames: u64,
    /// `"base2"` (default) or `"natural"`: logarithm in the SNR-to-rate map.
    #[serde(default = "default_log_base")]
    pub log_base: String,
    /// Optional early stop once a stage's shares are stationary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kkt_stop_tol: Option<f64>,
    /// `"upf"`, `"pf-equal"`, `"pf-weighted"`, or `"compare"` (default).
    #[serde(default = "default_run_mode")]
    pub run_mode: String,
    /// Reserved for future stochastic channel models; unused today.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Default artifact directory; `--out` overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub channel: ChannelFile,
    pub carriers: Vec<CarrierFile>,
    pub users: Vec<UserFile>,
}

fn default_log_base() -> String {
    "base2".to_owned()
}

fn default_run_mode() -> String {
    "compare".to_owned()
}

fn default_one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub ref_distance_m: f64,
    pub pathloss_exponent: f64,
    pub noise_power_w: f64,
    /// Fixed channel gain for every user; omit to derive gains from the
    /// path-loss model instead.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equal_gain: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarrierFile {
    pub id: u32,
    pub freq_hz: f64,
    pub total_power_w: f64,
    pub n_rbs: usize,
    pub rb_bandwidth_mhz: f64,
    /// SNR penalty factor of practical modulation (1 = capacity).
    #[serde(default = "default_one")]
    pub snr_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserFile {
    pub id: u32,
    pub distance_m: f64,
    /// Priority weight used by the weighted proportional-fair baseline.
    #[serde(default = "default_one")]
    pub pf_weight: f64,
    pub utility: UtilityFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum UtilityFile {
    Sigmoidal { a: f64, b: f64 },
    Logarithmic { k: f64, r_max: f64 },
}

/// Parses a policy or run-mode word. `"pf"` is accepted as shorthand for
/// the equal-weight baseline.
pub fn parse_policy(word: &str) -> Option<PolicyKind> {
    match word {
        "upf" => Some(PolicyKind::Upf),
        "pf" | "pf-equal" => Some(PolicyKind::TraditionalPf { weighted: false }),
        "pf-weighted" => Some(PolicyKind::TraditionalPf { weighted: true }),
        _ => None,
    }
}

fn parse_run_mode(word: &str) -> Result<RunMode, ConfigError> {
    if word == "compare" {
        return Ok(RunMode::Compare);
    }
    parse_policy(word)
        .map(RunMode::Single)
        .ok_or(ConfigError::BadChoice {
            field: "run_mode",
            got: word.to_owned(),
            expected: "\"upf\", \"pf\", \"pf-equal\", \"pf-weighted\", \"compare\"",
        })
}

fn parse_log_base(word: &str) -> Result<LogBase, ConfigError> {
    match word {
        "base2" => Ok(LogBase::Base2),
        "natural" => Ok(LogBase::Natural),
        _ => Err(ConfigError::BadChoice {
            field: "log_base",
            got: word.to_owned(),
            expected: "\"base2\", \"natural\"",
        }),
    }
}

impl ScenarioFile {
    /// Maps the raw file onto a validated core scenario.
    pub fn to_scenario(&self) -> Result<Scenario, ConfigError> {
        let gain_mode = match self.channel.equal_gain {
            Some(g) => GainMode::Equal(g),
            None => GainMode::FromPathloss,
        };
        let channel = ChannelModel {
            ref_distance_m: self.channel.ref_distance_m,
            pathloss_exponent: self.channel.pathloss_exponent,
            noise_power_w: self.channel.noise_power_w,
            gain_mode,
        };
        let carriers = self
            .carriers
            .iter()
            .map(|c| Carrier {
                id: c.id,
                freq_hz: c.freq_hz,
                total_power_w: c.total_power_w,
                n_rbs: c.n_rbs,
                rb_bandwidth: c.rb_bandwidth_mhz,
                snr_gap: c.snr_gap,
            })
            .collect();
        let users = self
            .users
            .iter()
            .map(|u| {
                let utility = match u.utility {
                    UtilityFile::Sigmoidal { a, b } => Utility::sigmoidal(a, b),
                    UtilityFile::Logarithmic { k, r_max } => Utility::logarithmic(k, r_max),
                }
                .map_err(|source| ConfigError::BadUtility { user: u.id, source })?;
                Ok(UserEquipment {
                    id: u.id,
                    distance_m: u.distance_m,
                    utility,
                    pf_weight: u.pf_weight,
                })
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;
        let scenario = Scenario {
            name: self.name.clone(),
            carriers,
            users,
            channel,
            loss_threshold_db: self.loss_threshold_db,
            n_frames: self.n_frames,
            log_base: parse_log_base(&self.log_base)?,
            kkt_stop_tol: self.kkt_stop_tol,
            run_mode: parse_run_mode(&self.run_mode)?,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Rebuilds the on-disk form of a core scenario (used to round-trip).
    pub fn from_scenario(scenario: &Scenario, output_dir: Option<&Path>) -> Self {
        ScenarioFile {
            name: scenario.name.clone(),
            loss_threshold_db: scenario.loss_threshold_db,
            n_frames: scenario.n_frames,
            log_base: match scenario.log_base {
                LogBase::Base2 => "base2".to_owned(),
                LogBase::Natural => "natural".to_owned(),
            },
            kkt_stop_tol: scenario.kkt_stop_tol,
            run_mode: match scenario.run_mode {
                RunMode::Compare => "compare".to_owned(),
                RunMode::Single(p) => p.label().to_owned(),
            },
            seed: None,
            output_dir: output_dir.map(Path::to_path_buf),
            channel: ChannelFile {
                ref_distance_m: scenario.channel.ref_distance_m,
                pathloss_exponent: scenario.channel.pathloss_exponent,
                noise_power_w: scenario.channel.noise_power_w,
                equal_gain: match scenario.channel.gain_mode {
                    GainMode::Equal(g) => Some(g),
                    GainMode::FromPathloss => None,
                },
            },
            carriers: scenario
                .carriers
                .iter()
                .map(|c| CarrierFile {
                    id: c.id,
                    freq_hz: c.freq_hz,
                    total_power_w: c.total_power_w,
                    n_rbs: c.n_rbs,
                    rb_bandwidth_mhz: c.rb_bandwidth,
                    snr_gap: c.snr_gap,
                })
                .collect(),
            users: scenario
                .users
                .iter()
                .map(|u| UserFile {
                    id: u.id,
                    distance_m: u.distance_m,
                    pf_weight: u.pf_weight,
                    utility: match u.utility {
                        Utility::Sigmoidal { a, b, .. } => UtilityFile::Sigmoidal { a, b },
                        Utility::Logarithmic { k, r_max } => {
                            UtilityFile::Logarithmic { k, r_max }
                        }
                    },
                })
                .collect(),
        }
    }
}

/// Reads, parses, and validates a scenario file; returns both the core
/// scenario and the raw file (which carries CLI-level fields such as
/// `output_dir`).
pub fn load_scenario(path: &Path) -> Result<(Scenario, ScenarioFile), ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let file: ScenarioFile = toml::from_str(&text).map_err(|source| ConfigError::Parse {
        path: path.to_path_buf(),
        source: Box::new(source),
    })?;
    let scenario = file.to_scenario()?;
    Ok((scenario, file))
}

/// Writes a scenario back to disk in the same schema `load_scenario` reads.
pub fn save_scenario(
    path: &Path,
    scenario: &Scenario,
    output_dir: Option<&Path>,
) -> Result<(), ConfigError> {
    let file = ScenarioFile::from_scenario(scenario, output_dir);
    let text = toml::to_string_pretty(&file)?;
    fs::write(path, text).map_err(|source| ConfigError::Write {
        path: path.to_path_buf(),
        source,
    })
}
