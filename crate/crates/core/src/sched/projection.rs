//! Dry-run of pool occupancy over a forecast.
//!
//! The projection is a fluid version of the simulator's debt accounting:
//! forecast writes and unmaps generate tied debt, live snapshots hold
//! `luns × write_blocks` per bin until they expire into snap-delete debt,
//! and each bin drains pending debt with a caller-chosen op budget.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::hardware::{allocate_cores, HardwareModel};
use crate::debt::{CostPerBlock, DebtKind, SnapPolicy, DEFAULT_DMD_RATIO};
use crate::forecast::ChannelForecast;

/// Parameters that turn foreground activity into debt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DebtParams {
    pub block_size: u64,
    pub dmd_ratio: f64,
    pub cost_per_block: CostPerBlock,
    pub snap: SnapPolicy,
}

impl Default for DebtParams {
    fn default() -> Self {
        Self {
            block_size: 4096,
            dmd_ratio: DEFAULT_DMD_RATIO,
            cost_per_block: CostPerBlock::default(),
            snap: SnapPolicy::default(),
        }
    }
}

/// Pool and backlog state at the first projected bin.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionStart {
    /// Absolute bin index, used to align the snapshot schedule.
    pub bin: usize,
    pub total_blocks: u64,
    /// Live blocks, including blocks held by live snapshots.
    pub used: f64,
    pub tied: f64,
    /// Outstanding BG ops of all queued and inline debt.
    pub pending_ops: f64,
    /// Held blocks per live snapshot, keyed by creation bin.
    pub snapshots: BTreeMap<usize, f64>,
}

impl ProjectionStart {
    pub fn empty_pool(bin: usize, total_blocks: u64, used: u64) -> Self {
        Self {
            bin,
            total_blocks,
            used: used as f64,
            tied: 0.0,
            pending_ops: 0.0,
            snapshots: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Projection {
    /// `(used + tied) / total` after each bin's drain.
    pub occupancy: Vec<f64>,
    /// Pending BG ops before each bin's drain.
    pub pending_ops: Vec<f64>,
    /// Tied blocks before each bin's drain.
    pub tied: Vec<f64>,
    /// Ops actually drained per bin.
    pub drained: Vec<f64>,
    /// Pending work exceeded the bin's budget.
    pub budget_limited: Vec<bool>,
}

impl Projection {
    pub fn first_above(&self, limit: f64) -> Option<usize> {
        self.occupancy.iter().position(|&u| u > limit)
    }

    pub fn max_occupancy(&self) -> f64 {
        self.occupancy.iter().copied().fold(0.0, f64::max)
    }
}

/// Projects `bins` bins of `forecast` from `start`, draining
/// `budget(i, demand_ops)` BG ops in bin `i`.
pub fn project(
    start: &ProjectionStart,
    forecast: &ChannelForecast,
    bins: usize,
    hw: &HardwareModel,
    debt: &DebtParams,
    mut budget: impl FnMut(usize, f64) -> f64,
) -> Projection {
    let bins = bins.min(forecast.len());
    let total = start.total_blocks as f64;
    let (mut used, mut tied, mut pending) = (start.used, start.tied, start.pending_ops);
    let mut snaps = start.snapshots.clone();
    let (s_bins, _) = debt.snap.bins(hw.interval);
    let luns = debt.snap.luns as f64;
    let cost = |k| debt.cost_per_block.of(k);
    let mut out = Projection::default();

    for i in 0..bins {
        let t = start.bin + i;
        if let Some(created) = debt.snap.expiring_at(hw.interval, t) {
            if let Some(held) = snaps.remove(&created) {
                used -= held;
                tied += held;
                pending += held * cost(DebtKind::SnapDelete);
            }
        }
        if t.is_multiple_of(s_bins) {
            snaps.entry(t).or_insert(0.0);
        }

        let wb = forecast.write_blocks[i];
        let u = forecast.unique_fraction[i];
        let overwrite = (1.0 - u) * wb;
        used += u * wb;
        tied += overwrite;
        pending += overwrite * cost(DebtKind::OverwriteGc);
        for held in snaps.values_mut() {
            *held += luns * wb;
        }
        used += luns * wb * snaps.len() as f64;

        let data = forecast.unmap_len[i] / debt.block_size as f64;
        if data > 0.0 {
            let held_total: f64 = snaps.values().sum();
            let blocks = data * (1.0 + debt.dmd_ratio);
            used -= data.min((used - held_total).max(0.0));
            tied += blocks;
            pending += blocks * cost(DebtKind::Unmap);
        }

        out.pending_ops.push(pending);
        out.tied.push(tied);
        let b = budget(i, forecast.total_iops[i]).max(0.0);
        let drained = b.min(pending);
        if pending > 0.0 {
            tied -= drained * tied / pending;
        }
        pending -= drained;
        out.drained.push(drained);
        out.budget_limited.push(out.pending_ops[i] > b);
        out.occupancy.push((used + tied) / total);
    }
    out
}

/// Budget closure for a constant CFF: BG gets every core the forecast
/// foreground load leaves free, plus `cff` stolen ones.
pub fn cff_budget(hw: &HardwareModel, cff: u32) -> impl Fn(usize, f64) -> f64 + '_ {
    move |i, demand| {
        let alloc = allocate_cores(demand / hw.interval, hw, cff, i);
        alloc.c_bg as f64 * hw.bg_ops_per_core() as f64
    }
}
