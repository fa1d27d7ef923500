//! Shared fixtures for the criterion benchmarks: a mixed-traffic user
//! population and stage problems in the two shapes that matter for
//! performance — per-block graded rates (every column distinct) and flat
//! rates (every column identical, the equal-gain fast path).

use casched_core::oracle::StageProblem;
use casched_core::scheduler::ScheduleState;
use casched_core::{UserEquipment, Utility};

/// The four traffic profiles used across the benchmarks.
pub fn utility_profiles() -> Vec<Utility> {
    vec![
        Utility::sigmoidal(5.0, 10.0).expect("valid sigmoid"),
        Utility::sigmoidal(1.0, 30.0).expect("valid sigmoid"),
        Utility::logarithmic(15.0, 100.0).expect("valid log"),
        Utility::logarithmic(0.5, 100.0).expect("valid log"),
    ]
}

/// `n` users cycling through the traffic profiles at staggered distances.
pub fn mixed_users(n: usize) -> Vec<UserEquipment> {
    let profiles = utility_profiles();
    (0..n)
        .map(|i| UserEquipment {
            id: i as u32 + 1,
            distance_m: 60.0 + 40.0 * i as f64,
            pf_weight: if i % 4 < 2 { 2.0 } else { 1.0 },
            utility: profiles[i % profiles.len()].clone(),
        })
        .collect()
}

/// Rate table whose columns all differ: user `i`'s rate on block `j` is
/// `base_i * (1 + j/50)`, mimicking frequency-selective conditions.
pub fn graded_rate_table(n_users: usize, n_rbs: usize) -> Vec<Vec<f64>> {
    (0..n_users)
        .map(|i| {
            let base = 0.25 + 0.1 * i as f64;
            (0..n_rbs).map(|j| base * (1.0 + j as f64 / 50.0)).collect()
        })
        .collect()
}

/// Rate table whose columns are all identical: one rate per user,
/// replicated across blocks, as a fixed common channel gain produces.
pub fn flat_rate_table(n_users: usize, n_rbs: usize) -> Vec<Vec<f64>> {
    (0..n_users)
        .map(|i| vec![0.25 + 0.1 * i as f64; n_rbs])
        .collect()
}

/// Stage problem over `users` with no carried rates.
pub fn stage_problem(rate_table: Vec<Vec<f64>>, users: &[UserEquipment]) -> StageProblem {
    let utilities = users.iter().map(|u| u.utility.clone()).collect();
    let carried = vec![0.0; users.len()];
    StageProblem::new(rate_table, utilities, carried).expect("valid stage problem")
}

/// A schedule state advanced past the cold start, so per-frame benchmarks
/// measure the steady regime rather than the all-infinite first frames.
pub fn warm_state(
    rate_table: Vec<Vec<f64>>,
    users: &[UserEquipment],
    frames: u64,
) -> ScheduleState {
    use casched_core::scheduler::{assign_frame, update_shares, PolicyKind};
    let carried = vec![0.0; users.len()];
    let mut state = ScheduleState::new(1, rate_table, carried).expect("valid state");
    for _ in 0..frames {
        let assignment = assign_frame(&state, users, PolicyKind::Upf);
        update_shares(&mut state, &assignment).expect("consistent assignment");
    }
    state
}
