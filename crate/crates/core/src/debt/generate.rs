//! Debt generated by foreground activity.

use serde::{Deserialize, Serialize};

use super::item::{DebtItem, DebtKind};
use crate::error::{Error, Result};
use crate::trace::BinStats;

pub const DEFAULT_DMD_RATIO: f64 = 0.03;
pub const DMD_RANGE: (f64, f64) = (0.02, 0.05);

/// Splits foreground ops into `(reads, writes)` by the bin's read ratio,
/// rounding reads half-up.
pub fn split_load(bin: &BinStats) -> (u64, u64) {
    let fg = bin.read_iops + bin.write_iops;
    let reads = ((bin.read_ratio.clamp(0.0, 1.0) * fg as f64).round() as u64).min(fg);
    (reads, fg - reads)
}

/// Overwritten blocks `round((1 − u) · write_blocks)`.
pub fn overwrite_blocks(write_blocks: u64, unique_fraction: f64) -> u64 {
    let u = unique_fraction.clamp(0.0, 1.0);
    (((1.0 - u) * write_blocks as f64).round() as u64).min(write_blocks)
}

/// Newly written unique blocks; the complement of [`overwrite_blocks`].
pub fn unique_blocks(write_blocks: u64, unique_fraction: f64) -> u64 {
    write_blocks - overwrite_blocks(write_blocks, unique_fraction)
}

pub fn gen_overwrite_debt(bin: &BinStats, created_at: usize, cost: f64) -> Option<DebtItem> {
    let blocks = overwrite_blocks(bin.write_blocks, bin.unique_write_fraction);
    (blocks > 0).then(|| DebtItem::new(DebtKind::OverwriteGc, blocks, created_at, cost))
}

pub fn check_dmd(dmd_ratio: f64) -> Result<()> {
    if (DMD_RANGE.0..=DMD_RANGE.1).contains(&dmd_ratio) {
        Ok(())
    } else {
        Err(Error::param(format!(
            "dmd ratio {dmd_ratio} outside [{}, {}]",
            DMD_RANGE.0, DMD_RANGE.1
        )))
    }
}

/// `ceil(len / block_size · (1 + dmd_ratio))`. A relative slack of 1e-12
/// keeps exact products from rounding up through float error.
pub fn unmap_blocks(unmap_len: u64, block_size: u64, dmd_ratio: f64) -> u64 {
    let x = unmap_len as f64 / block_size as f64 * (1.0 + dmd_ratio);
    (x - x * 1e-12).ceil().max(0.0) as u64
}

pub fn gen_unmap_debt(
    bin: &BinStats,
    block_size: u64,
    dmd_ratio: f64,
    created_at: usize,
    cost: f64,
) -> Result<Option<DebtItem>> {
    check_dmd(dmd_ratio)?;
    if block_size == 0 {
        return Err(Error::param("block size must be positive"));
    }
    let blocks = unmap_blocks(bin.unmap_len, block_size, dmd_ratio);
    Ok((blocks > 0).then(|| DebtItem::new(DebtKind::Unmap, blocks, created_at, cost)))
}

/// Scheduled snapshots of a LUN group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapPolicy {
    pub luns: u32,
    /// Seconds between snapshot creations.
    pub schedule_interval: f64,
    /// Snapshot lifetime in seconds.
    pub retention: f64,
}

impl Default for SnapPolicy {
    fn default() -> Self {
        Self {
            luns: 10,
            schedule_interval: 3600.0,
            retention: 3600.0,
        }
    }
}

impl SnapPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.schedule_interval > 0.0) || self.retention < self.schedule_interval {
            return Err(Error::param(
                "snapshot policy needs retention >= schedule interval > 0",
            ));
        }
        Ok(())
    }

    /// `(schedule, retention)` in whole bins, at least one bin each.
    pub fn bins(&self, interval: f64) -> (usize, usize) {
        let b = |secs: f64| ((secs / interval).round() as usize).max(1);
        (b(self.schedule_interval), b(self.retention))
    }

    /// Number of snapshots alive during bin `t` (created at or before `t`,
    /// expiring after it). Snapshots are created at bins 0, s, 2s, ...
    pub fn live_count(&self, interval: f64, t: usize) -> usize {
        let (s, r) = self.bins(interval);
        let first = (t + 1).saturating_sub(r).div_ceil(s);
        let last = t / s;
        last + 1 - first.min(last + 1)
    }

    /// Creation bin of the snapshot expiring at the start of bin `now`.
    pub fn expiring_at(&self, interval: f64, now: usize) -> Option<usize> {
        let (s, r) = self.bins(interval);
        let created = now.checked_sub(r)?;
        (created % s == 0).then_some(created)
    }
}

/// Snap-delete debt for the snapshot expiring at the start of bin `now`:
/// `luns · Σ write_blocks` over its lifetime. `write_history[i]` holds the
/// write blocks of bin `i`; a history that stops short of `now` yields a
/// partial-window item.
pub fn gen_snap_delete_debt(
    policy: &SnapPolicy,
    interval: f64,
    write_history: &[u64],
    now: usize,
    cost: f64,
) -> Result<Option<DebtItem>> {
    policy.validate()?;
    let Some(created) = policy.expiring_at(interval, now) else {
        return Ok(None);
    };
    let end = now.min(write_history.len());
    let sum: u64 = write_history
        .get(created..end)
        .map_or(0, |w| w.iter().sum());
    let blocks = sum * policy.luns as u64;
    Ok((blocks > 0).then(|| {
        let mut item = DebtItem::new(DebtKind::SnapDelete, blocks, now, cost);
        item.partial_window = end < now;
        item
    }))
}
