//! Per-carrier user groups.
//!
//! A user belongs to a carrier's group when the path loss at its distance is
//! within the scenario's loss threshold. Because path loss grows with
//! frequency at every distance, the groups of a multi-carrier scenario are
//! nested: the highest-frequency carrier serves the smallest disc of users,
//! and every lower-frequency carrier serves a superset.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::channel::{Carrier, ChannelModel};
use crate::utility::Utility;

/// Error raised when group construction produces nothing schedulable.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroupingError {
    #[error("no user is within coverage of any carrier")]
    NoCoveredUsers,
}

/// One scheduled user: position, application utility, and the weight used
/// by the weighted proportional-fair baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct UserEquipment {
    /// Small integer identifier, unique within a scenario.
    pub id: u32,
    /// Distance from the base station in meters.
    pub distance_m: f64,
    /// Application utility driving the scheduler.
    pub utility: Utility,
    /// Weight for the weighted proportional-fair baseline (1.0 = neutral).
    pub pf_weight: f64,
}

/// The outcome of group construction.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroupAssignment {
    /// Carrier ids each user can be served on (users with none are omitted).
    pub carriers_by_user: BTreeMap<u32, BTreeSet<u32>>,
    /// User ids in each carrier's group, ascending.
    pub users_by_carrier: BTreeMap<u32, Vec<u32>>,
    /// Users outside every carrier's footprint, ascending.
    pub excluded_users: Vec<u32>,
}

/// Ids of the carriers whose path loss at the user's distance is within
/// `loss_threshold_db`.
pub fn in_range_carriers(
    ue: &UserEquipment,
    carriers: &[Carrier],
    model: &ChannelModel,
    loss_threshold_db: f64,
) -> BTreeSet<u32> {
    carriers
        .iter()
        .filter(|c| model.pathloss_db(c.freq_hz, ue.distance_m) <= loss_threshold_db)
        .map(|c| c.id)
        .collect()
}

/// Builds the per-carrier groups for a whole scenario. Users out of every
/// footprint are reported in [`GroupAssignment::excluded_users`]; if that is
/// all of them, the scenario is unschedulable and an error is returned.
pub fn build_groups(
    users: &[UserEquipment],
    carriers: &[Carrier],
    model: &ChannelModel,
    loss_threshold_db: f64,
) -> Result<GroupAssignment, GroupingError> {
    let mut assignment = GroupAssignment::default();
    for carrier in carriers {
        assignment.users_by_carrier.insert(carrier.id, Vec::new());
    }
    for ue in users {
        let in_range = in_range_carriers(ue, carriers, model, loss_threshold_db);
        if in_range.is_empty() {
            assignment.excluded_users.push(ue.id);
            continue;
        }
        for carrier_id in &in_range {
            assignment
                .users_by_carrier
                .get_mut(carrier_id)
                .expect("in-range carrier id comes from the carrier list")
                .push(ue.id);
        }
        assignment.carriers_by_user.insert(ue.id, in_range);
    }
    if assignment.carriers_by_user.is_empty() {
        return Err(GroupingError::NoCoveredUsers);
    }
    for group in assignment.users_by_carrier.values_mut() {
        group.sort_unstable();
    }
    assignment.excluded_users.sort_unstable();
    Ok(assignment)
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::GainMode;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model() -> ChannelModel {
        ChannelModel {
            ref_distance_m: 1.0,
            pathloss_exponent: 3.76,
            noise_power_w: 1.6e-9,
            gain_mode: GainMode::Equal(1e-7),
        }
    }

    fn carrier(id: u32, freq_hz: f64) -> Carrier {
        Carrier {
            id,
            freq_hz,
            total_power_w: 20.0,
            n_rbs: 25,
            rb_bandwidth: 0.18,
            snr_gap: 1.0,
        }
    }

    fn user(id: u32, distance_m: f64) -> UserEquipment {
        UserEquipment {
            id,
            distance_m,
            utility: Utility::logarithmic(0.5, 100.0).unwrap(),
            pf_weight: 1.0,
        }
    }

    #[test]
    fn two_carrier_reference_groups() {
        // 2.6 GHz reaches ~236 m at a 130 dB budget, 0.8 GHz ~443 m; four
        // users inside each ring should split exactly into nested groups.
        let carriers = [carrier(1, 2.6e9), carrier(2, 0.8e9)];
        let users: Vec<_> = [60.0, 100.0, 150.0, 200.0, 260.0, 300.0, 350.0, 400.0]
            .iter()
            .enumerate()
            .map(|(i, &d)| user(i as u32 + 1, d))
            .collect();
        let groups = build_groups(&users, &carriers, &model(), 130.0).unwrap();
        assert_eq!(groups.users_by_carrier[&1], vec![1, 2, 3, 4]);
        assert_eq!(groups.users_by_carrier[&2], vec![1, 2, 3, 4, 5, 6, 7, 8]);
        assert!(groups.excluded_users.is_empty());
        assert_eq!(
            groups.carriers_by_user[&3],
            BTreeSet::from([1, 2])
        );
        assert_eq!(groups.carriers_by_user[&7], BTreeSet::from([2]));
    }

    #[test]
    fn out_of_coverage_users_are_reported() {
        let carriers = [carrier(1, 2.6e9)];
        let users = [user(1, 100.0), user(2, 5000.0)];
        let groups = build_groups(&users, &carriers, &model(), 130.0).unwrap();
        assert_eq!(groups.excluded_users, vec![2]);
        assert_eq!(groups.users_by_carrier[&1], vec![1]);
        assert!(!groups.carriers_by_user.contains_key(&2));
    }

    #[test]
    fn all_users_out_of_coverage_is_an_error() {
        let carriers = [carrier(1, 2.6e9)];
        let users = [user(1, 5000.0), user(2, 9000.0)];
        assert_eq!(
            build_groups(&users, &carriers, &model(), 130.0),
            Err(GroupingError::NoCoveredUsers)
        );
    }

    #[test]
    fn boundary_user_is_in_range() {
        // Membership is inclusive: path loss exactly at the threshold counts.
        let m = model();
        let c = carrier(1, 2.6e9);
        let radius = m.coverage_radius_m(c.freq_hz, 130.0).unwrap();
        let ue = user(1, radius);
        let threshold = m.pathloss_db(c.freq_hz, radius);
        assert!(in_range_carriers(&ue, &[c], &m, threshold).contains(&1));
    }

    #[test]
    fn groups_nest_by_frequency_on_random_scenarios() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let n_carriers = rng.gen_range(1..=4);
            let mut freqs: Vec<f64> = (0..n_carriers)
                .map(|_| rng.gen_range(5e8..6e9))
                .collect();
            freqs.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let carriers: Vec<_> = freqs
                .iter()
                .enumerate()
                .map(|(i, &f)| carrier(i as u32 + 1, f))
                .collect();
            let users: Vec<_> = (0..rng.gen_range(1..=12))
                .map(|i| user(i + 1, rng.gen_range(1.0..2000.0)))
                .collect();
            let threshold = rng.gen_range(80.0..140.0);
            let Ok(groups) = build_groups(&users, &carriers, &model(), threshold) else {
                continue; // nothing covered; nothing to check
            };
            // Ascending coverage radius == descending frequency; each group
            // must contain the previous one.
            for window in carriers.windows(2) {
                let smaller: BTreeSet<_> =
                    groups.users_by_carrier[&window[0].id].iter().collect();
                let larger: BTreeSet<_> =
                    groups.users_by_carrier[&window[1].id].iter().collect();
                assert!(
                    smaller.is_subset(&larger),
                    "group of {} Hz not nested in group of {} Hz",
                    window[0].freq_hz,
                    window[1].freq_hz
                );
            }
        }
    }
}
