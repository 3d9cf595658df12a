//! Trace-driven replay of the pool under the fixed and dynamic policies.

mod compare;
mod config;
mod engine;
mod metrics;

pub use compare::{compare_policies, Comparison};
pub use config::{DynamicParams, PolicyKind, SimConfig};
pub use engine::{run, ForecastSource};
pub use metrics::{BinRecord, LedgerRow, SimMetrics, SimSummary, SimTotals};
