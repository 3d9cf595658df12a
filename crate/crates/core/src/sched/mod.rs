//! Core partitioning between foreground and background, queue dispatch,
//! and the two bucket policies.

mod cff;
mod dispatch;
mod fixed;
mod hardware;
mod planner;
mod projection;

pub use cff::{cff_is_safe, compute_cff, next_idle_start, CffDecision, IdleDef};
pub use dispatch::{dispatch, prioritize, queue_priority, DispatchOutcome, HEAD_WINDOW};
pub use fixed::FixedBucketPolicy;
pub use hardware::{allocate_cores, CoreAllocation, HardwareModel};
pub use planner::{dynamic_bucket_planner, PlanBin, SchedulePlan};
pub use projection::{cff_budget, project, DebtParams, Projection, ProjectionStart};
