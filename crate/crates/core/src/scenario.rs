//! Scenario container: everything one simulation run needs, plus the
//! validation that the pipeline relies on (unique ids, positive physical
//! quantities, and a footprint for every carrier at the loss threshold).

use std::collections::BTreeSet;

use thiserror::Error;

use crate::channel::{Carrier, ChannelModel, GainMode, LogBase};
use crate::grouping::UserEquipment;
use crate::scheduler::PolicyKind;

/// What a run should execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    /// One policy.
    Single(PolicyKind),
    /// The UPF scheduler plus both proportional-fair baselines, for
    /// side-by-side comparison.
    Compare,
}

/// A complete simulation input.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub carriers: Vec<Carrier>,
    pub users: Vec<UserEquipment>,
    pub channel: ChannelModel,
    /// Maximum tolerable path loss (dB); fixes every carrier's footprint.
    pub loss_threshold_db: f64,
    /// Frames to schedule per carrier stage.
    pub n_frames: u64,
    /// Logarithm base of the SNR-to-rate mapping.
    pub log_base: LogBase,
    /// Optional early stop for stages whose shares become stationary.
    pub kkt_stop_tol: Option<f64>,
    pub run_mode: RunMode,
}

/// Why a scenario was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid scenario: {subject}: {reason}")]
pub struct ScenarioError {
    /// What is wrong (e.g. `carrier 3`, `user 2`, `channel`).
    pub subject: String,
    pub reason: String,
}

impl ScenarioError {
    fn new(subject: impl Into<String>, reason: impl Into<String>) -> Self {
        ScenarioError {
            subject: subject.into(),
            reason: reason.into(),
        }
    }
}

fn require_positive(
    subject: &str,
    name: &str,
    value: f64,
) -> Result<(), ScenarioError> {
    if !(value.is_finite() && value > 0.0) {
        return Err(ScenarioError::new(
            subject,
            format!("{name} must be positive and finite, got {value}"),
        ));
    }
    Ok(())
}

impl Scenario {
    /// Checks the scenario is well-formed and every carrier covers at
    /// least its reference distance at the loss threshold.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.carriers.is_empty() {
            return Err(ScenarioError::new("carriers", "at least one carrier is required"));
        }
        if self.users.is_empty() {
            return Err(ScenarioError::new("users", "at least one user is required"));
        }
        if self.n_frames == 0 {
            return Err(ScenarioError::new("n_frames", "at least one frame is required"));
        }
        if let Some(tol) = self.kkt_stop_tol {
            require_positive("kkt_stop_tol", "the early-stop tolerance", tol)?;
        }
        require_positive("loss_threshold_db", "the loss threshold", self.loss_threshold_db)?;

        let subject = "channel";
        require_positive(subject, "ref_distance_m", self.channel.ref_distance_m)?;
        require_positive(subject, "pathloss_exponent", self.channel.pathloss_exponent)?;
        require_positive(subject, "noise_power_w", self.channel.noise_power_w)?;
        if let GainMode::Equal(g) = self.channel.gain_mode {
            require_positive(subject, "the equal channel gain", g)?;
        }

        let mut carrier_ids = BTreeSet::new();
        for c in &self.carriers {
            let subject = format!("carrier {}", c.id);
            if !carrier_ids.insert(c.id) {
                return Err(ScenarioError::new(subject, "duplicate carrier id"));
            }
            require_positive(&subject, "freq_hz", c.freq_hz)?;
            require_positive(&subject, "total_power_w", c.total_power_w)?;
            require_positive(&subject, "rb_bandwidth", c.rb_bandwidth)?;
            require_positive(&subject, "snr_gap", c.snr_gap)?;
            if c.n_rbs == 0 {
                return Err(ScenarioError::new(subject, "n_rbs must be at least 1"));
            }
            // A carrier whose reference loss already exceeds the threshold
            // has no footprint at all and would break the stage ordering.
            if self
                .channel
                .coverage_radius_m(c.freq_hz, self.loss_threshold_db)
                .is_err()
            {
                return Err(ScenarioError::new(
                    format!("carrier {}", c.id),
                    format!(
                        "no footprint: the reference path loss at {} Hz already exceeds \
                         the {} dB threshold",
                        c.freq_hz, self.loss_threshold_db
                    ),
                ));
            }
        }

        let mut user_ids = BTreeSet::new();
        for u in &self.users {
            let subject = format!("user {}", u.id);
            if !user_ids.insert(u.id) {
                return Err(ScenarioError::new(subject, "duplicate user id"));
            }
            require_positive(&subject, "distance_m", u.distance_m)?;
            require_positive(&subject, "pf_weight", u.pf_weight)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
