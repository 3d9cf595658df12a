//! Queue prioritisation and weighted round-robin dispatch.

use crate::debt::{DebtKind, DebtQueue, Progress};

/// Items at the head of a queue considered when scoring it.
pub const HEAD_WINDOW: usize = 16;

/// Reclaimable tied blocks per service op over the head window, times the
/// kind's urgency. Empty queues score 0.
pub fn queue_priority(q: &DebtQueue) -> f64 {
    let (tied, ops) = q
        .items
        .iter()
        .take(HEAD_WINDOW)
        .fold((0u64, 0u64), |(t, o), it| {
            (t + it.remaining_tied(), o + it.remaining_ops())
        });
    if ops == 0 {
        0.0
    } else {
        tied as f64 / ops as f64 * q.kind.urgency()
    }
}

/// Queue indices with scores, highest first; ties keep kind order.
pub fn prioritize(queues: &[DebtQueue]) -> Vec<(usize, f64)> {
    let mut order: Vec<(usize, f64)> = queues.iter().map(queue_priority).enumerate().collect();
    order.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| queues[a.0].kind.cmp(&queues[b.0].kind))
    });
    order
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DispatchOutcome {
    pub ops_used: u64,
    /// Progress per kind, indexed by [`DebtKind::index`].
    pub per_kind: [Progress; 3],
}

impl DispatchOutcome {
    pub fn total(&self) -> Progress {
        let mut p = Progress::default();
        for k in self.per_kind {
            p += k;
        }
        p
    }

    pub fn of(&self, kind: DebtKind) -> Progress {
        self.per_kind[kind.index()]
    }
}

/// Spends up to `budget` ops across the queues. Each round gives every
/// non-empty queue a share of the remaining budget proportional to its
/// priority (at least one op); items are consumed FIFO and may be left
/// partially processed.
pub fn dispatch(queues: &mut [DebtQueue], budget: u64) -> DispatchOutcome {
    let mut out = DispatchOutcome::default();
    while out.ops_used < budget {
        let order: Vec<(usize, f64)> = prioritize(queues)
            .into_iter()
            .filter(|&(i, _)| !queues[i].is_empty())
            .collect();
        if order.is_empty() {
            break;
        }
        let weight_sum: f64 = order.iter().map(|o| o.1).sum();
        let round_budget = budget - out.ops_used;
        for (i, p) in order {
            let left = budget - out.ops_used;
            if left == 0 {
                break;
            }
            let share = if weight_sum > 0.0 {
                (round_budget as f64 * p / weight_sum).floor() as u64
            } else {
                round_budget
            };
            let progress = queues[i].process(share.max(1).min(left));
            out.ops_used += progress.ops;
            out.per_kind[queues[i].kind.index()] += progress;
        }
    }
    out
}
