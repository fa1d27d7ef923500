//! Application-aware resource-block scheduling for multi-carrier cellular
//! downlink.
//!
//! The library models a base station that aggregates several component
//! carriers with nested coverage areas and divides each carrier's resource
//! blocks among the users it can reach. Scheduling decisions are driven by
//! per-application utility functions (sigmoidal for real-time traffic,
//! logarithmic for delay-tolerant traffic) rather than by raw throughput:
//!
//! * [`utility`] — normalized sigmoidal and logarithmic utility families,
//!   evaluated in numerically stable form.
//! * [`channel`] — log-distance path loss, equal-power resource blocks, and
//!   the SNR-to-rate mapping.
//! * [`grouping`] — per-carrier user groups induced by a path-loss threshold.
//! * [`scheduler`] — the online utility-proportional-fair scheduler, the
//!   traditional proportional-fair baselines, and the multi-stage pipeline
//!   that chains carriers together.
//! * [`oracle`] — an independent convex solver that certifies the stage
//!   optimum the online scheduler should converge to.
//! * [`scenario`] — a validated description of one simulation setup.
//!
//! The per-carrier allocation state is a share matrix `phi` whose column for
//! each resource block lies on the probability simplex; the long-run rate of
//! a user is the share-weighted sum of its per-block rates. The online
//! scheduler updates `phi` one frame at a time and, for strictly concave
//! log-utilities, climbs the objective `L(phi) = sum_i ln U_i(c_i + r_i)`
//! up to a vanishing per-frame slack.

pub mod channel;
pub mod grouping;
pub mod oracle;
pub mod scenario;
pub mod scheduler;
pub mod utility;

pub use channel::{Carrier, ChannelModel, GainMode, LogBase};
pub use grouping::{GroupAssignment, UserEquipment};
pub use oracle::StageProblem;
pub use scenario::{RunMode, Scenario};
pub use scheduler::{PolicyKind, ScheduleState, SimResult, StageResult};
pub use utility::Utility;
