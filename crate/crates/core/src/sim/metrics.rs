use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::{PolicyKind, SimConfig};
use crate::debt::DebtKind;
use crate::error::Result;
use crate::sched::PlanBin;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinRecord {
    pub bin: usize,
    /// Foreground ops arriving in this bin.
    pub offered: u64,
    /// Foreground ops served in this bin, backlog included.
    pub served: u64,
    /// New ops delayed past their arrival bin for lack of FG cores.
    pub queued_latency: u64,
    /// New ops blocked for lack of pool space.
    pub queued_oor: u64,
    /// FG ops still waiting at the end of the bin.
    pub backlog: u64,
    pub pool_used: u64,
    pub debt_tied: u64,
    pub pool_total: u64,
    pub c_fg: u32,
    pub c_bg: u32,
    pub cff: u32,
    pub bg_budget: u64,
    pub bg_ops: u64,
    pub debt_created: u64,
    pub debt_processed: u64,
}

impl BinRecord {
    pub fn violations(&self) -> u64 {
        self.queued_latency + self.queued_oor
    }

    /// `(pool_used + debt_tied) / pool_total` at the end of the bin.
    pub fn occupancy(&self) -> f64 {
        (self.pool_used + self.debt_tied) as f64 / self.pool_total as f64
    }
}

/// One row of the per-bin debt ledger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub bin: usize,
    pub kind: DebtKind,
    pub created_blocks: u64,
    pub processed_blocks: u64,
    pub outstanding_blocks: u64,
    pub tied_blocks: u64,
    pub pool_used: u64,
    pub pool_free: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimTotals {
    pub bins: usize,
    pub offered: u64,
    pub served: u64,
    pub queued_latency: u64,
    pub queued_oor: u64,
    pub violating_bins: usize,
    pub oor_bins: usize,
    pub debt_created: u64,
    pub debt_processed: u64,
    pub debt_outstanding: u64,
    pub debt_created_by_kind: BTreeMap<DebtKind, u64>,
    pub inline_items: u64,
    pub max_occupancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub policy: PolicyKind,
    /// First bin counted in `totals`.
    pub measured_from: usize,
    pub totals: SimTotals,
    /// Percent of offered FG ops violating the SLO.
    pub slo_violation_fraction: f64,
    /// Percent of offered FG ops blocked for pool space.
    pub queued_oor_fraction: f64,
    /// Percent of bins with at least one violating op.
    pub violating_interval_fraction: f64,
    pub oor_interval_fraction: f64,
    /// Plans whose projection could not stay under the hard limit.
    pub depletion_plans: usize,
    pub records: Vec<BinRecord>,
    pub ledger: Vec<LedgerRow>,
    /// Plan entry in force for each bin (dynamic policy only).
    pub plan: Vec<PlanBin>,
}

fn percent(part: u64, whole: u64) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

impl SimMetrics {
    /// Recomputes totals and fractions over `records[measured_from..]`.
    pub fn summarize(&mut self) {
        let recs = &self.records[self.measured_from.min(self.records.len())..];
        let t = &mut self.totals;
        t.bins = recs.len();
        t.offered = recs.iter().map(|r| r.offered).sum();
        t.served = recs.iter().map(|r| r.served).sum();
        t.queued_latency = recs.iter().map(|r| r.queued_latency).sum();
        t.queued_oor = recs.iter().map(|r| r.queued_oor).sum();
        t.violating_bins = recs.iter().filter(|r| r.violations() > 0).count();
        t.oor_bins = recs.iter().filter(|r| r.queued_oor > 0).count();
        t.max_occupancy = recs.iter().map(BinRecord::occupancy).fold(0.0, f64::max);
        self.slo_violation_fraction = percent(t.queued_latency + t.queued_oor, t.offered);
        self.queued_oor_fraction = percent(t.queued_oor, t.offered);
        self.violating_interval_fraction = percent(t.violating_bins as u64, t.bins as u64);
        self.oor_interval_fraction = percent(t.oor_bins as u64, t.bins as u64);
    }

    pub fn write_records_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_ledger_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        for r in &self.ledger {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary(&self, cfg: &SimConfig) -> SimSummary {
        SimSummary {
            version: env!("CARGO_PKG_VERSION").to_string(),
            policy: self.policy,
            seed: cfg.seed,
            slo_violation_fraction: self.slo_violation_fraction,
            queued_oor_fraction: self.queued_oor_fraction,
            violating_interval_fraction: self.violating_interval_fraction,
            oor_interval_fraction: self.oor_interval_fraction,
            depletion_plans: self.depletion_plans,
            measured_from: self.measured_from,
            totals: self.totals.clone(),
            config: cfg.clone(),
        }
    }
}

/// Run summary written as `summary.json`. Contains no timestamps, so
/// identical runs produce identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub version: String,
    pub policy: PolicyKind,
    pub seed: u64,
    pub slo_violation_fraction: f64,
    pub queued_oor_fraction: f64,
    pub violating_interval_fraction: f64,
    pub oor_interval_fraction: f64,
    pub depletion_plans: usize,
    pub measured_from: usize,
    pub totals: SimTotals,
    pub config: SimConfig,
}
