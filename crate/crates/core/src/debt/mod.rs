//! Background debt: generation from foreground activity, per-kind queues
//! with tied-capacity buckets, and the pool capacity ledger.

mod generate;
mod item;
mod pool;

pub use generate::{
    check_dmd, gen_overwrite_debt, gen_snap_delete_debt, gen_unmap_debt, overwrite_blocks,
    split_load, unique_blocks, unmap_blocks, SnapPolicy, DEFAULT_DMD_RATIO, DMD_RANGE,
};
pub use item::{service_cost, CostPerBlock, DebtItem, DebtKind, DebtQueue, Progress, Rejection};
pub use pool::{IntervalDelta, PoolState, DEFAULT_HARD_LIMIT};
