//! Online per-frame scheduling and the multi-stage carrier pipeline.
//!
//! Every frame, each resource block of a carrier goes to the user whose
//! metric is highest. The utility-proportional-fair (UPF) metric prices a
//! block for user `i` as
//!
//! ```text
//! U'_i(c_i + r_i) * H_ij / U_i(c_i + r_i)
//! ```
//!
//! where `r_i` is the user's current share-weighted stage rate and `c_i` the
//! rate carried in from earlier stages; the traditional proportional-fair
//! baseline uses `w_i * H_ij / avg_i` instead. After each frame the share
//! matrix is folded toward the frame's assignment:
//!
//! ```text
//! phi[n+1] = ((n-1)/n) * phi[n] + (1/n) * [i assigned j]
//! ```
//!
//! which keeps every block's share column on the probability simplex and
//! makes `phi` the running empirical frequency of assignments. Carriers are
//! processed in ascending coverage-radius order; rates granted by earlier
//! (smaller, faster) carriers are carried into later stages so wide-area
//! carriers can concentrate on the users only they can reach.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::channel::{Carrier, ChannelModel, LogBase};
use crate::grouping::{self, GroupingError, UserEquipment};
use crate::oracle::{self, StageProblem};
use crate::scenario::{Scenario, ScenarioError};
use crate::utility::Utility;

/// How many frames to run between early-stop stationarity checks.
const EARLY_STOP_INTERVAL: u64 = 100;

/// Errors from the frame loop and the simulation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("assignment has {got} entries, expected one per resource block ({expected})")]
    AssignmentLength { expected: usize, got: usize },
    #[error("assignment sends block {rb} to user index {user}, but the group has {n_users}")]
    AssignmentUser { rb: usize, user: usize, n_users: usize },
    #[error("schedule state is malformed: {0}")]
    BadState(String),
}

/// Errors from [`run_simulation`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulationError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Grouping(#[from] GroupingError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("internal stage problem construction failed: {0}")]
    Stage(String),
}

/// Scheduling policy for one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    /// Utility-proportional fairness: marginal utility over utility.
    Upf,
    /// Traditional proportional fairness; `weighted` applies each user's
    /// `pf_weight`, otherwise all users weigh 1.
    TraditionalPf { weighted: bool },
}

impl PolicyKind {
    /// Stable lower-case label used in file and directory names.
    pub fn label(&self) -> &'static str {
        match self {
            PolicyKind::Upf => "upf",
            PolicyKind::TraditionalPf { weighted: false } => "pf-equal",
            PolicyKind::TraditionalPf { weighted: true } => "pf-weighted",
        }
    }
}

/// Mutable per-carrier scheduling state.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleState {
    /// Carrier this stage schedules.
    pub carrier_id: u32,
    /// `rate_table[i][j]`: user `i`'s rate on block `j` when it owns it.
    pub rate_table: Vec<Vec<f64>>,
    /// Rate each user carries in from earlier stages.
    pub carried: Vec<f64>,
    /// Share matrix; column `j` sums to 1 once frame 1 has run.
    pub phi: Vec<Vec<f64>>,
    /// Share-weighted stage rate of each user under the current `phi`.
    pub stage_rate: Vec<f64>,
    /// Number `n` of the next frame to run, starting at 1.
    pub frame_index: u64,
}

impl ScheduleState {
    /// Fresh state with all shares zero, ready for frame 1.
    pub fn new(
        carrier_id: u32,
        rate_table: Vec<Vec<f64>>,
        carried: Vec<f64>,
    ) -> Result<Self, ScheduleError> {
        let n_users = rate_table.len();
        if carried.len() != n_users {
            return Err(ScheduleError::BadState(format!(
                "{n_users} rate rows but {} carried rates",
                carried.len()
            )));
        }
        let n_rbs = rate_table.first().map_or(0, Vec::len);
        for (i, row) in rate_table.iter().enumerate() {
            if row.len() != n_rbs {
                return Err(ScheduleError::BadState(format!(
                    "rate row {i} has {} entries, expected {n_rbs}",
                    row.len()
                )));
            }
            if row.iter().any(|h| !h.is_finite() || *h < 0.0) {
                return Err(ScheduleError::BadState(format!(
                    "rate row {i} contains a negative or non-finite entry"
                )));
            }
        }
        if carried.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(ScheduleError::BadState(
                "carried rates must be finite and nonnegative".into(),
            ));
        }
        Ok(ScheduleState {
            carrier_id,
            phi: vec![vec![0.0; n_rbs]; n_users],
            stage_rate: vec![0.0; n_users],
            carried,
            rate_table,
            frame_index: 1,
        })
    }

    pub fn n_users(&self) -> usize {
        self.rate_table.len()
    }

    pub fn n_rbs(&self) -> usize {
        self.rate_table.first().map_or(0, Vec::len)
    }
}

/// UPF metric of one user on one block: marginal utility at the user's
/// current total rate, times the block rate, over the utility itself.
/// `0` for a useless block; `+inf` while the user's utility is still zero
/// (cold start), so such users are served first.
pub fn upf_metric(utility: &Utility, carried: f64, stage_rate: f64, h: f64) -> f64 {
    if h == 0.0 {
        return 0.0;
    }
    utility.rate_ratio(carried + stage_rate) * h
}

/// Traditional proportional-fair metric: `weight * h / avg_rate`, with the
/// same `0` for useless blocks and `+inf` cold-start rule.
pub fn pf_metric(weight: f64, h: f64, avg_rate: f64) -> f64 {
    if h == 0.0 {
        return 0.0;
    }
    if avg_rate == 0.0 {
        return f64::INFINITY;
    }
    weight * h / avg_rate
}

/// Picks a user for every resource block by per-block argmax of the policy
/// metric, using the frame-start state throughout (assignments within a
/// frame do not feed back into each other). Finite ties go to the lowest
/// user index; among cold-start `+inf` ties the block goes to the user
/// whose utility would grow fastest (`slope * h`, or `weight * h` for the
/// proportional-fair baselines), then to the lowest index.
pub fn assign_frame(
    state: &ScheduleState,
    users: &[UserEquipment],
    policy: PolicyKind,
) -> Vec<usize> {
    assert_eq!(users.len(), state.n_users(), "user list does not match state");
    let n_rbs = state.n_rbs();
    let mut assignment = Vec::with_capacity(n_rbs);
    for j in 0..n_rbs {
        let mut best: Option<(f64, f64, usize)> = None;
        for (i, ue) in users.iter().enumerate() {
            let h = state.rate_table[i][j];
            let (metric, tiebreak) = match policy {
                PolicyKind::Upf => (
                    upf_metric(&ue.utility, state.carried[i], state.stage_rate[i], h),
                    ue.utility.slope(state.carried[i] + state.stage_rate[i]) * h,
                ),
                PolicyKind::TraditionalPf { weighted } => {
                    let w = if weighted { ue.pf_weight } else { 1.0 };
                    (pf_metric(w, h, state.stage_rate[i]), w * h)
                }
            };
            let wins = match best {
                None => true,
                Some((m, t, _)) => {
                    metric > m || (metric == m && metric == f64::INFINITY && tiebreak > t)
                }
            };
            if wins {
                best = Some((metric, tiebreak, i));
            }
        }
        assignment.push(best.expect("at least one user per group").2);
    }
    assignment
}

/// Folds one frame's assignment into the share matrix and refreshes the
/// stage rates; `assignment[j]` is the user index given block `j`.
pub fn update_shares(state: &mut ScheduleState, assignment: &[usize]) -> Result<(), ScheduleError> {
    let n_users = state.n_users();
    let n_rbs = state.n_rbs();
    if assignment.len() != n_rbs {
        return Err(ScheduleError::AssignmentLength {
            expected: n_rbs,
            got: assignment.len(),
        });
    }
    if let Some((rb, &user)) = assignment.iter().enumerate().find(|(_, &u)| u >= n_users) {
        return Err(ScheduleError::AssignmentUser {
            rb,
            user,
            n_users,
        });
    }
    let n = state.frame_index as f64;
    let decay = (n - 1.0) / n;
    let boost = 1.0 / n;
    for (j, &winner) in assignment.iter().enumerate() {
        for row in state.phi.iter_mut() {
            row[j] *= decay;
        }
        state.phi[winner][j] += boost;
    }
    state.frame_index += 1;
    for (i, row) in state.rate_table.iter().enumerate() {
        state.stage_rate[i] = row.iter().zip(&state.phi[i]).map(|(h, p)| h * p).sum();
    }
    Ok(())
}

/// Stage objective at the current state: `sum_i ln U_i(c_i + r_i)`.
pub fn stage_objective(state: &ScheduleState, users: &[UserEquipment]) -> f64 {
    assert_eq!(users.len(), state.n_users(), "user list does not match state");
    users
        .iter()
        .enumerate()
        .map(|(i, ue)| ue.utility.log_value(state.carried[i] + state.stage_rate[i]))
        .sum()
}

/// Knobs for one stage run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageOptions {
    /// Number of frames to schedule.
    pub n_frames: u64,
    /// Scheduling policy.
    pub policy: PolicyKind,
    /// Optional early stop: end the stage once the stationarity gap of
    /// `phi` falls below this (checked every few frames).
    pub kkt_stop_tol: Option<f64>,
}

/// What one stage run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct StageOutcome {
    /// Final state (shares, stage rates, frame counter).
    pub state: ScheduleState,
    /// Stage objective after each frame; early entries can be `-inf` while
    /// some user's utility is still zero.
    pub trajectory: Vec<f64>,
    /// Frames actually run (less than requested only on early stop).
    pub frames_run: u64,
}

/// Runs the per-frame loop on an explicit rate table.
pub fn run_stage(
    carrier_id: u32,
    rate_table: Vec<Vec<f64>>,
    users: &[UserEquipment],
    carried: Vec<f64>,
    opts: &StageOptions,
) -> Result<StageOutcome, ScheduleError> {
    if users.len() != rate_table.len() {
        return Err(ScheduleError::BadState(format!(
            "{} users but {} rate rows",
            users.len(),
            rate_table.len()
        )));
    }
    let mut state = ScheduleState::new(carrier_id, rate_table, carried)?;
    if state.n_users() == 0 || state.n_rbs() == 0 {
        return Ok(StageOutcome {
            state,
            trajectory: Vec::new(),
            frames_run: 0,
        });
    }
    let stop_problem = opts.kkt_stop_tol.map(|_| {
        StageProblem::new(
            state.rate_table.clone(),
            users.iter().map(|u| u.utility).collect(),
            state.carried.clone(),
        )
        .expect("validated state makes a valid stage problem")
    });
    let mut trajectory = Vec::with_capacity(opts.n_frames as usize);
    let mut frames_run = 0;
    for frame in 1..=opts.n_frames {
        let assignment = assign_frame(&state, users, opts.policy);
        update_shares(&mut state, &assignment)?;
        trajectory.push(stage_objective(&state, users));
        frames_run = frame;
        if let (Some(tol), Some(problem)) = (opts.kkt_stop_tol, &stop_problem) {
            if frame % EARLY_STOP_INTERVAL == 0 && oracle::kkt_residual(&state.phi, problem) <= tol
            {
                break;
            }
        }
    }
    Ok(StageOutcome {
        state,
        trajectory,
        frames_run,
    })
}

/// Per-user/per-block rates for one carrier and group under the channel
/// model: equal-power blocks, the user's gain at its distance, and the
/// SNR-to-rate mapping.
pub fn build_rate_table(
    carrier: &Carrier,
    users: &[UserEquipment],
    model: &ChannelModel,
    base: LogBase,
) -> Vec<Vec<f64>> {
    let rb_power = carrier.rb_power();
    users
        .iter()
        .map(|ue| {
            let gain = model.gain(carrier.freq_hz, ue.distance_m);
            let rate = carrier.rb_rate(model.rb_snr(rb_power, gain), base);
            vec![rate; carrier.n_rbs]
        })
        .collect()
}

/// Runs one carrier stage from the channel model (rate table built
/// internally via [`build_rate_table`]).
pub fn run_carrier_stage(
    carrier: &Carrier,
    users: &[UserEquipment],
    model: &ChannelModel,
    base: LogBase,
    carried: Vec<f64>,
    opts: &StageOptions,
) -> Result<StageOutcome, ScheduleError> {
    let rate_table = build_rate_table(carrier, users, model, base);
    run_stage(carrier.id, rate_table, users, carried, opts)
}

/// Everything recorded about one carrier stage of a simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct StageResult {
    pub carrier_id: u32,
    /// Footprint radius that put this stage at its place in the order.
    pub coverage_radius_m: f64,
    /// Group members in rate-table row order (ascending user id).
    pub user_ids: Vec<u32>,
    pub rate_table: Vec<Vec<f64>>,
    /// Final share matrix.
    pub phi: Vec<Vec<f64>>,
    /// Rates carried into this stage, aligned with `user_ids`.
    pub carried: Vec<f64>,
    /// Rates granted by this stage, aligned with `user_ids`.
    pub stage_rate: Vec<f64>,
    /// Stage objective after each frame.
    pub trajectory: Vec<f64>,
    pub frames_run: u64,
    /// Stationarity gap of the final shares (0 = exactly at the stage
    /// optimum; the UPF scheduler drives this toward 0, baselines need not).
    pub kkt_residual: f64,
    /// Stage objective at the final shares.
    pub final_objective: f64,
}

/// A full simulation run: every stage, plus per-user aggregate rates.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub policy: PolicyKind,
    /// Stages in scheduling order (ascending coverage radius).
    pub stages: Vec<StageResult>,
    /// Final aggregate rate per user id (0 for out-of-coverage users).
    pub aggregate_rate: BTreeMap<u32, f64>,
    /// `sum_i ln U_i(r_i)` over covered users at the aggregate rates.
    pub total_log_utility: f64,
    /// Human-readable notes (e.g. users outside every footprint).
    pub warnings: Vec<String>,
}

/// Runs the whole multi-carrier pipeline for one policy: build groups,
/// schedule carriers in ascending coverage-radius order while carrying
/// granted rates forward, and certify each stage's final shares with the
/// stationarity gap.
pub fn run_simulation(
    scenario: &Scenario,
    policy: PolicyKind,
) -> Result<SimResult, SimulationError> {
    scenario.validate()?;
    let groups = grouping::build_groups(
        &scenario.users,
        &scenario.carriers,
        &scenario.channel,
        scenario.loss_threshold_db,
    )?;
    let mut warnings = Vec::new();
    for &uid in &groups.excluded_users {
        warnings.push(format!("user {uid} is outside every carrier's footprint"));
    }

    // Ascending footprint, ties by id; validation guarantees every carrier
    // has a footprint at the scenario threshold.
    let mut order: Vec<(f64, u32, &Carrier)> = scenario
        .carriers
        .iter()
        .map(|c| {
            let radius = scenario
                .channel
                .coverage_radius_m(c.freq_hz, scenario.loss_threshold_db)
                .expect("validated scenario has a footprint per carrier");
            (radius, c.id, c)
        })
        .collect();
    order.sort_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).expect("radii are finite"));

    let users_by_id: BTreeMap<u32, &UserEquipment> =
        scenario.users.iter().map(|u| (u.id, u)).collect();
    let mut aggregate: BTreeMap<u32, f64> =
        scenario.users.iter().map(|u| (u.id, 0.0)).collect();

    let opts = StageOptions {
        n_frames: scenario.n_frames,
        policy,
        kkt_stop_tol: scenario.kkt_stop_tol,
    };
    let mut stages = Vec::with_capacity(order.len());
    for (radius, carrier_id, carrier) in order {
        let user_ids = groups.users_by_carrier[&carrier_id].clone();
        let group: Vec<UserEquipment> = user_ids
            .iter()
            .map(|uid| users_by_id[uid].clone())
            .collect();
        let carried: Vec<f64> = user_ids.iter().map(|uid| aggregate[uid]).collect();
        let outcome = run_carrier_stage(
            carrier,
            &group,
            &scenario.channel,
            scenario.log_base,
            carried.clone(),
            &opts,
        )?;
        for (uid, rate) in user_ids.iter().zip(&outcome.state.stage_rate) {
            *aggregate.get_mut(uid).expect("group user ids come from the scenario") += rate;
        }
        let kkt_residual = if group.is_empty() {
            0.0
        } else {
            let problem = StageProblem::new(
                outcome.state.rate_table.clone(),
                group.iter().map(|u| u.utility).collect(),
                outcome.state.carried.clone(),
            )
            .map_err(|e| SimulationError::Stage(e.to_string()))?;
            oracle::kkt_residual(&outcome.state.phi, &problem)
        };
        let final_objective = stage_objective(&outcome.state, &group);
        stages.push(StageResult {
            carrier_id,
            coverage_radius_m: radius,
            user_ids,
            rate_table: outcome.state.rate_table.clone(),
            phi: outcome.state.phi.clone(),
            carried,
            stage_rate: outcome.state.stage_rate.clone(),
            trajectory: outcome.trajectory,
            frames_run: outcome.frames_run,
            kkt_residual,
            final_objective,
        });
    }

    let total_log_utility = scenario
        .users
        .iter()
        .filter(|u| groups.carriers_by_user.contains_key(&u.id))
        .map(|u| u.utility.log_value(aggregate[&u.id]))
        .sum();
    Ok(SimResult {
        policy,
        stages,
        aggregate_rate: aggregate,
        total_log_utility,
        warnings,
    })
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::GainMode;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn log_user(id: u32, k: f64) -> UserEquipment {
        UserEquipment {
            id,
            distance_m: 100.0,
            utility: Utility::logarithmic(k, 100.0).unwrap(),
            pf_weight: 1.0,
        }
    }

    fn sig_user(id: u32, a: f64, b: f64) -> UserEquipment {
        UserEquipment {
            id,
            distance_m: 100.0,
            utility: Utility::sigmoidal(a, b).unwrap(),
            pf_weight: 2.0,
        }
    }

    #[test]
    fn upf_metric_reference_points() {
        let u = Utility::sigmoidal(5.0, 10.0).unwrap();
        // At the inflection: 1.25 * 1 / 0.5.
        assert_relative_eq!(upf_metric(&u, 0.0, 10.0, 1.0), 2.5, max_relative = 1e-12);
        // Carried and stage rate add up before evaluation.
        assert_relative_eq!(upf_metric(&u, 6.0, 4.0, 1.0), 2.5, max_relative = 1e-12);
        assert_eq!(upf_metric(&u, 0.0, 0.0, 1.0), f64::INFINITY);
        assert_eq!(upf_metric(&u, 0.0, 0.0, 0.0), 0.0);
        assert_eq!(upf_metric(&u, 0.0, 10.0, 0.0), 0.0);
    }

    #[test]
    fn pf_metric_reference_points() {
        assert_relative_eq!(pf_metric(1.0, 2.0, 4.0), 0.5, max_relative = 1e-12);
        assert_relative_eq!(pf_metric(2.0, 2.0, 4.0), 1.0, max_relative = 1e-12);
        assert_eq!(pf_metric(1.0, 2.0, 0.0), f64::INFINITY);
        assert_eq!(pf_metric(1.0, 0.0, 0.0), 0.0);
    }

    #[test]
    fn share_update_arithmetic() {
        let users = [log_user(1, 0.5), log_user(2, 0.5)];
        let mut state =
            ScheduleState::new(1, vec![vec![1.0], vec![1.0]], vec![0.0, 0.0]).unwrap();
        // Frame 1: winner takes share exactly 1.
        update_shares(&mut state, &[0]).unwrap();
        assert_eq!(state.phi[0][0], 1.0);
        assert_eq!(state.phi[1][0], 0.0);
        assert_eq!(state.frame_index, 2);
        assert_eq!(state.stage_rate[0], 1.0);
        // Frame 2: shares halve toward the new winner.
        update_shares(&mut state, &[1]).unwrap();
        assert_eq!(state.phi[0][0], 0.5);
        assert_eq!(state.phi[1][0], 0.5);
        let _ = users;
    }

    #[test]
    fn malformed_assignments_are_rejected() {
        let mut state =
            ScheduleState::new(1, vec![vec![1.0, 1.0], vec![1.0, 1.0]], vec![0.0, 0.0]).unwrap();
        assert_eq!(
            update_shares(&mut state, &[0]),
            Err(ScheduleError::AssignmentLength { expected: 2, got: 1 })
        );
        assert_eq!(
            update_shares(&mut state, &[0, 5]),
            Err(ScheduleError::AssignmentUser { rb: 1, user: 5, n_users: 2 })
        );
    }

    #[test]
    fn cold_start_prefers_fastest_utility_growth() {
        // Both users are at zero utility (metric +inf); the block must go to
        // the one whose utility would grow fastest, despite its higher index.
        let users = [sig_user(1, 5.0, 10.0), log_user(2, 15.0)];
        let state =
            ScheduleState::new(1, vec![vec![1.0], vec![1.0]], vec![0.0, 0.0]).unwrap();
        let assignment = assign_frame(&state, &users, PolicyKind::Upf);
        // slope(0) of log(15, 100) is ~2.05; the steep sigmoid's is ~e^-50.
        assert_eq!(assignment, vec![1]);
    }

    #[test]
    fn finite_ties_go_to_the_lowest_index() {
        let users = [log_user(1, 0.5), log_user(2, 0.5)];
        let mut state =
            ScheduleState::new(1, vec![vec![1.0], vec![1.0]], vec![0.0, 0.0]).unwrap();
        // Give both users identical positive rates: metrics tie finitely.
        state.phi = vec![vec![0.5], vec![0.5]];
        state.stage_rate = vec![0.5, 0.5];
        state.frame_index = 3;
        let assignment = assign_frame(&state, &users, PolicyKind::Upf);
        assert_eq!(assignment, vec![0]);
    }

    #[test]
    fn useless_blocks_are_never_preferred() {
        // User 2 has zero rate on block 0, so even at cold start the block
        // must go to user 1 (metric 0 vs +inf on the usable block).
        let users = [log_user(1, 0.5), log_user(2, 15.0)];
        let state = ScheduleState::new(
            1,
            vec![vec![1.0, 1.0], vec![0.0, 1.0]],
            vec![0.0, 0.0],
        )
        .unwrap();
        let assignment = assign_frame(&state, &users, PolicyKind::Upf);
        assert_eq!(assignment[0], 0);
        assert_eq!(assignment[1], 1);
    }

    #[test]
    fn columns_stay_on_the_simplex() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n_users = rng.gen_range(1..=6);
            let n_rbs = rng.gen_range(1..=8);
            let users: Vec<UserEquipment> = (0..n_users)
                .map(|i| {
                    if rng.gen_bool(0.5) {
                        sig_user(i as u32 + 1, rng.gen_range(0.5..3.0), rng.gen_range(2.0..20.0))
                    } else {
                        log_user(i as u32 + 1, rng.gen_range(0.3..10.0))
                    }
                })
                .collect();
            let table: Vec<Vec<f64>> = (0..n_users)
                .map(|_| (0..n_rbs).map(|_| rng.gen_range(0.1..3.0)).collect())
                .collect();
            let mut state =
                ScheduleState::new(1, table, vec![0.0; n_users]).unwrap();
            for frame in 1..=200u64 {
                let assignment = assign_frame(&state, &users, PolicyKind::Upf);
                update_shares(&mut state, &assignment).unwrap();
                for j in 0..state.n_rbs() {
                    let sum: f64 = state.phi.iter().map(|row| row[j]).sum();
                    assert!(
                        (sum - 1.0).abs() <= 1e-9,
                        "column {j} sums to {sum} after frame {frame}"
                    );
                    assert!(state.phi.iter().all(|row| row[j] >= 0.0));
                }
            }
        }
    }

    #[test]
    fn identical_pair_converges_to_an_even_split() {
        let users = [log_user(1, 0.5), log_user(2, 0.5)];
        let outcome = run_stage(
            1,
            vec![vec![1.0], vec![1.0]],
            &users,
            vec![0.0, 0.0],
            &StageOptions {
                n_frames: 1000,
                policy: PolicyKind::Upf,
                kkt_stop_tol: None,
            },
        )
        .unwrap();
        let phi = &outcome.state.phi;
        assert!((phi[0][0] - 0.5).abs() <= 1e-3, "phi = {:?}", phi);
        assert!((phi[1][0] - 0.5).abs() <= 1e-3);
        // The independent solver agrees on the even split.
        let problem = StageProblem::new(
            outcome.state.rate_table.clone(),
            vec![users[0].utility, users[1].utility],
            vec![0.0, 0.0],
        )
        .unwrap();
        let sol = oracle::solve_stage_optimum(&problem, 1e-9).unwrap();
        assert_relative_eq!(sol.phi[0][0], 0.5, epsilon = 1e-6);
    }

    #[test]
    fn trajectory_decreases_are_bounded() {
        // Once finite, the objective may only dip by O(1/n^2) per frame.
        let users = [
            sig_user(1, 2.0, 5.0),
            log_user(2, 3.0),
            log_user(3, 0.4),
        ];
        let table = vec![vec![0.9, 1.1, 0.7]; 3];
        let outcome = run_stage(
            1,
            table,
            &users,
            vec![0.0, 0.0, 0.0],
            &StageOptions {
                n_frames: 4000,
                policy: PolicyKind::Upf,
                kkt_stop_tol: None,
            },
        )
        .unwrap();
        let traj = &outcome.trajectory;
        let mut fitted_b: f64 = 0.0;
        for m in 1..traj.len() {
            if traj[m - 1].is_finite() && traj[m].is_finite() {
                let n = (m + 1) as f64; // the update into traj[m] divided by n
                fitted_b = fitted_b.max((traj[m - 1] - traj[m]) * n * n);
            }
        }
        assert!(fitted_b <= 100.0, "fitted decrease constant {fitted_b}");
        // And the tail must have essentially converged.
        let last = traj[traj.len() - 1];
        let half = traj[traj.len() / 2];
        assert!((last - half).abs() <= 1e-2);
    }

    #[test]
    fn pipeline_carries_rates_between_stages() {
        let scenario = two_carrier_scenario();
        let result = run_simulation(&scenario, PolicyKind::Upf).unwrap();
        assert_eq!(result.stages.len(), 2);
        // Stage order: smaller footprint (higher frequency) first.
        assert!(result.stages[0].coverage_radius_m < result.stages[1].coverage_radius_m);
        let first = &result.stages[0];
        let second = &result.stages[1];
        assert!(first.carried.iter().all(|c| *c == 0.0));
        // Users of the first stage carry exactly their stage rate forward.
        for (pos, uid) in first.user_ids.iter().enumerate() {
            let second_pos = second.user_ids.iter().position(|u| u == uid).unwrap();
            assert_relative_eq!(
                second.carried[second_pos],
                first.stage_rate[pos],
                max_relative = 1e-12
            );
        }
        // Aggregates are the per-stage sums.
        for (uid, rate) in &result.aggregate_rate {
            let mut expected = 0.0;
            for stage in &result.stages {
                if let Some(pos) = stage.user_ids.iter().position(|u| u == uid) {
                    expected += stage.stage_rate[pos];
                }
            }
            assert_relative_eq!(*rate, expected, max_relative = 1e-12);
        }
        // Everyone inside the wide footprint ends up with a positive rate.
        assert!(result.aggregate_rate.values().all(|r| *r > 0.0));
    }

    #[test]
    fn simulation_is_deterministic() {
        let scenario = two_carrier_scenario();
        let a = run_simulation(&scenario, PolicyKind::Upf).unwrap();
        let b = run_simulation(&scenario, PolicyKind::Upf).unwrap();
        assert_eq!(a, b);
    }

    fn two_carrier_scenario() -> Scenario {
        Scenario {
            name: "two-carrier".into(),
            carriers: vec![
                Carrier {
                    id: 1,
                    freq_hz: 2.6e9,
                    total_power_w: 20.0,
                    n_rbs: 6,
                    rb_bandwidth: 0.18,
                    snr_gap: 1.0,
                },
                Carrier {
                    id: 2,
                    freq_hz: 0.8e9,
                    total_power_w: 30.0,
                    n_rbs: 6,
                    rb_bandwidth: 0.18,
                    snr_gap: 1.0,
                },
            ],
            users: vec![
                sig_user(1, 5.0, 10.0),
                log_user(2, 15.0),
                UserEquipment { distance_m: 300.0, ..sig_user(3, 1.0, 30.0) },
                UserEquipment { distance_m: 400.0, ..log_user(4, 0.5) },
            ],
            channel: ChannelModel {
                ref_distance_m: 1.0,
                pathloss_exponent: 3.76,
                noise_power_w: 1.6e-9,
                gain_mode: GainMode::Equal(1e-7),
            },
            loss_threshold_db: 130.0,
            n_frames: 1500,
            log_base: LogBase::Base2,
            kkt_stop_tol: None,
            run_mode: crate::scenario::RunMode::Single(PolicyKind::Upf),
        }
    }
}
