use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Background work kinds. Declaration order is the priority tie-break.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DebtKind {
    SnapDelete,
    OverwriteGc,
    Unmap,
}

impl DebtKind {
    pub const ALL: [DebtKind; 3] = [DebtKind::SnapDelete, DebtKind::OverwriteGc, DebtKind::Unmap];

    pub fn as_str(self) -> &'static str {
        match self {
            DebtKind::SnapDelete => "snap_delete",
            DebtKind::OverwriteGc => "overwrite_gc",
            DebtKind::Unmap => "unmap",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Service-level urgency multiplier. Every implemented kind is 1; a
    /// rebuild-style kind would raise it.
    pub fn urgency(self) -> f64 {
        1.0
    }
}

impl fmt::Display for DebtKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Blocks manipulated per debt block, per kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostPerBlock {
    pub snap_delete: f64,
    pub overwrite_gc: f64,
    pub unmap: f64,
}

impl Default for CostPerBlock {
    fn default() -> Self {
        Self {
            snap_delete: 1.0,
            overwrite_gc: 1.0,
            unmap: 1.0,
        }
    }
}

impl CostPerBlock {
    pub fn of(&self, kind: DebtKind) -> f64 {
        match kind {
            DebtKind::SnapDelete => self.snap_delete,
            DebtKind::OverwriteGc => self.overwrite_gc,
            DebtKind::Unmap => self.unmap,
        }
    }

    pub fn is_valid(&self) -> bool {
        DebtKind::ALL
            .iter()
            .all(|&k| self.of(k) > 0.0 && self.of(k).is_finite())
    }
}

/// BG ops needed to process `blocks` at `cost` ops per block.
pub fn service_cost(blocks: u64, cost: f64) -> u64 {
    (cost * blocks as f64).ceil() as u64
}

/// One unit of deferred background work.
///
/// Items may be processed across several intervals. Processed blocks are
/// prorated from processed ops with integer floors, reaching `blocks`
/// exactly when the last op completes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DebtItem {
    pub id: u64,
    pub kind: DebtKind,
    pub blocks: u64,
    pub created_at: usize,
    /// Pool blocks released when the item completes.
    pub tied_blocks: u64,
    pub ops_total: u64,
    pub ops_done: u64,
    /// Snap-delete window was cut short by missing history.
    pub partial_window: bool,
}

impl DebtItem {
    pub fn new(kind: DebtKind, blocks: u64, created_at: usize, cost: f64) -> Self {
        Self {
            id: 0,
            kind,
            blocks,
            created_at,
            tied_blocks: blocks,
            ops_total: service_cost(blocks, cost).max(1),
            ops_done: 0,
            partial_window: false,
        }
    }

    fn prorate(total: u64, done: u64, of: u64) -> u64 {
        (total as u128 * done as u128 / of as u128) as u64
    }

    pub fn processed_blocks(&self) -> u64 {
        Self::prorate(self.blocks, self.ops_done, self.ops_total)
    }

    pub fn released_tied(&self) -> u64 {
        Self::prorate(self.tied_blocks, self.ops_done, self.ops_total)
    }

    pub fn remaining_ops(&self) -> u64 {
        self.ops_total - self.ops_done
    }

    pub fn remaining_blocks(&self) -> u64 {
        self.blocks - self.processed_blocks()
    }

    pub fn remaining_tied(&self) -> u64 {
        self.tied_blocks - self.released_tied()
    }

    pub fn is_done(&self) -> bool {
        self.ops_done == self.ops_total
    }

    /// Applies up to `budget` ops; returns what changed.
    pub fn process(&mut self, budget: u64) -> Progress {
        let ops = budget.min(self.remaining_ops());
        let (b0, t0) = (self.processed_blocks(), self.released_tied());
        self.ops_done += ops;
        Progress {
            ops,
            blocks: self.processed_blocks() - b0,
            tied: self.released_tied() - t0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Progress {
    pub ops: u64,
    pub blocks: u64,
    pub tied: u64,
}

impl std::ops::AddAssign for Progress {
    fn add_assign(&mut self, o: Self) {
        self.ops += o.ops;
        self.blocks += o.blocks;
        self.tied += o.tied;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    QueueLimit,
    GlobalLimit,
}

/// FIFO of deferred items of one kind with a tied-capacity bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebtQueue {
    pub kind: DebtKind,
    pub items: VecDeque<DebtItem>,
    pub bucket_limit: u64,
}

impl DebtQueue {
    pub fn new(kind: DebtKind, bucket_limit: u64) -> Self {
        Self {
            kind,
            items: VecDeque::new(),
            bucket_limit,
        }
    }

    pub fn tied(&self) -> u64 {
        self.items.iter().map(DebtItem::remaining_tied).sum()
    }

    pub fn outstanding_blocks(&self) -> u64 {
        self.items.iter().map(DebtItem::remaining_blocks).sum()
    }

    pub fn pending_ops(&self) -> u64 {
        self.items.iter().map(DebtItem::remaining_ops).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Admits `item` if both this queue's bucket and the global bucket
    /// (`global_tied` across all queues, limit `global_limit`) have room.
    pub fn admit(
        &mut self,
        item: DebtItem,
        global_tied: u64,
        global_limit: u64,
    ) -> Result<(), (DebtItem, Rejection)> {
        if self.tied() + item.tied_blocks > self.bucket_limit {
            return Err((item, Rejection::QueueLimit));
        }
        if global_tied + item.tied_blocks > global_limit {
            return Err((item, Rejection::GlobalLimit));
        }
        self.items.push_back(item);
        Ok(())
    }

    /// Processes head items FIFO with up to `budget` ops.
    pub fn process(&mut self, budget: u64) -> Progress {
        let mut total = Progress::default();
        while total.ops < budget {
            let Some(head) = self.items.front_mut() else {
                break;
            };
            total += head.process(budget - total.ops);
            if head.is_done() {
                self.items.pop_front();
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn service_cost_examples() {
        assert_eq!(service_cost(1000, 1.0), 1000);
        assert_eq!(service_cost(1000, 0.5), 500);
        // 1000 ops on one core at 20 ops/s.
        assert_eq!(service_cost(1000, 1.0) as f64 / 20.0, 50.0);
    }

    #[test]
    fn admission_examples() {
        let mut q = DebtQueue::new(DebtKind::OverwriteGc, 1000);
        let item = |b| DebtItem::new(DebtKind::OverwriteGc, b, 0, 1.0);
        assert!(q.admit(item(500), 0, 10_000).is_ok());
        assert!(q.admit(item(300), 500, 10_000).is_ok());
        assert_eq!(q.tied(), 800);
        assert_eq!(
            q.admit(item(500), 800, 10_000).unwrap_err().1,
            Rejection::QueueLimit
        );
        let mut fresh = DebtQueue::new(DebtKind::Unmap, 1000);
        assert_eq!(
            fresh.admit(item(10), 5000, 5000).unwrap_err().1,
            Rejection::GlobalLimit
        );
        assert!(fresh.is_empty());
    }

    #[test]
    fn partial_processing_reaches_exact_totals() {
        let mut it = DebtItem::new(DebtKind::SnapDelete, 7, 0, 0.5);
        assert_eq!(it.ops_total, 4);
        let mut freed = 0;
        for _ in 0..4 {
            freed += it.process(1).blocks;
        }
        assert!(it.is_done());
        assert_eq!(freed, 7);
        assert_eq!(it.process(5).ops, 0);
    }

    #[test]
    fn queue_processes_fifo() {
        let mut q = DebtQueue::new(DebtKind::Unmap, u64::MAX);
        for (i, b) in [10u64, 20, 30].into_iter().enumerate() {
            let mut it = DebtItem::new(DebtKind::Unmap, b, i, 1.0);
            it.id = i as u64;
            q.admit(it, 0, u64::MAX).unwrap();
        }
        let p = q.process(25);
        assert_eq!(p.ops, 25);
        assert_eq!(p.blocks, 25);
        assert_eq!(q.items.front().unwrap().id, 1);
        assert_eq!(q.items.front().unwrap().remaining_ops(), 5);
    }

    proptest! {
        #[test]
        fn admit_is_monotone(
            existing in 0u64..2000,
            limit in 1u64..3000,
            global in 0u64..5000,
            global_limit in 1u64..6000,
            size in 1u64..2000,
            extra in 1u64..1000,
        ) {
            let mut q = DebtQueue::new(DebtKind::OverwriteGc, limit.max(existing));
            if existing > 0 {
                q.admit(DebtItem::new(DebtKind::OverwriteGc, existing, 0, 1.0), 0, u64::MAX).unwrap();
            }
            let mut a = q.clone();
            let small = a.admit(DebtItem::new(DebtKind::OverwriteGc, size, 1, 1.0), global, global_limit);
            let mut b = q.clone();
            let large = b.admit(DebtItem::new(DebtKind::OverwriteGc, size + extra, 1, 1.0), global, global_limit);
            if small.is_err() {
                prop_assert!(large.is_err());
            }
        }

        #[test]
        fn processing_conserves_blocks(blocks in 1u64..10_000, cost in 0.1f64..3.0, steps in prop::collection::vec(0u64..500, 1..40)) {
            let mut it = DebtItem::new(DebtKind::Unmap, blocks, 0, cost);
            let mut freed = 0;
            for s in steps {
                freed += it.process(s).blocks;
                prop_assert_eq!(freed + it.remaining_blocks(), blocks);
            }
            freed += it.process(u64::MAX).blocks;
            prop_assert_eq!(freed, blocks);
        }
    }
}
