//! Interval replay of a binned trace under a bucket policy.
//!
//! Phase order within bin `t`:
//! 1. expire the snapshot whose lifetime ended (its hold becomes
//!    snap-delete debt) and create the snapshot scheduled at `t`;
//! 2. append the bin's arrivals to the FG backlog and ask the policy for
//!    a core split (the dynamic policy replans on its cadence);
//! 3. serve the backlog FIFO with `c_fg` cores, blocking writes and
//!    unmaps the pool has no room for;
//! 4. turn served writes and unmaps into debt and admit it, or queue it
//!    for inline processing when the bucket is full;
//! 5. drain inline debt, then the queues, with `c_bg` cores;
//! 6. check the capacity and tied-block invariants and record the bin.

use std::collections::{BTreeMap, VecDeque};

use super::config::{PolicyKind, SimConfig};
use super::metrics::{BinRecord, LedgerRow, SimMetrics, SimTotals};
use crate::debt::{
    gen_snap_delete_debt, unique_blocks, unmap_blocks, DebtItem, DebtKind, DebtQueue,
    IntervalDelta, PoolState, Progress,
};
use crate::error::{Error, Result};
use crate::forecast::ChannelModels;
use crate::sched::{
    allocate_cores, dispatch, dynamic_bucket_planner, PlanBin, ProjectionStart, SchedulePlan,
};
use crate::trace::{BinStats, IntensitySeries};

/// Where the dynamic policy gets its forecaster.
#[derive(Debug, Clone, PartialEq)]
pub enum ForecastSource {
    /// Fit on the configured training prefix of the replayed trace.
    TrainPrefix,
    Models(ChannelModels),
}

fn prorate(total: u64, part: u64, whole: u64) -> u64 {
    if whole == 0 {
        0
    } else {
        (total as u128 * part as u128 / whole as u128) as u64
    }
}

/// Not-yet-served foreground work that arrived in one bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct FgBatch {
    arrival: usize,
    reads: u64,
    writes: u64,
    write_blocks: u64,
    unique_blocks: u64,
    unmaps: u64,
    unmap_len: u64,
}

impl FgBatch {
    fn from_bin(arrival: usize, b: &BinStats) -> Self {
        Self {
            arrival,
            reads: b.read_iops,
            writes: b.write_iops,
            write_blocks: b.write_blocks,
            unique_blocks: unique_blocks(b.write_blocks, b.unique_write_fraction),
            unmaps: b.unmap_ops,
            unmap_len: b.unmap_len,
        }
    }

    fn ops(&self) -> u64 {
        self.reads + self.writes + self.unmaps
    }

    /// `(write_blocks, unique_blocks)` carried by the first `w` writes.
    fn write_share(&self, w: u64) -> (u64, u64) {
        (
            prorate(self.write_blocks, w, self.writes),
            prorate(self.unique_blocks, w, self.writes),
        )
    }

    fn unmap_share(&self, m: u64) -> u64 {
        prorate(self.unmap_len, m, self.unmaps)
    }
}

/// Largest `x ∈ [0, hi]` with `fits(x)`, for monotone `fits`.
fn max_fitting(hi: u64, fits: impl Fn(u64) -> bool) -> u64 {
    if fits(hi) {
        return hi;
    }
    let (mut lo, mut hi) = (0, hi);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Splits `k` across `classes` proportionally (largest remainder, ties to
/// the lower index). Requires `k <= Σ classes`.
fn proportional(k: u64, classes: [u64; 3]) -> [u64; 3] {
    let sum: u64 = classes.iter().sum();
    if sum == 0 || k == 0 {
        return [0; 3];
    }
    let mut out = [0u64; 3];
    let mut rem = [(0u128, 0usize); 3];
    for i in 0..3 {
        let num = k as u128 * classes[i] as u128;
        out[i] = (num / sum as u128) as u64;
        rem[i] = (num % sum as u128, i);
    }
    let mut left = k - out.iter().sum::<u64>();
    rem.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in &rem {
        if left == 0 {
            break;
        }
        if out[i] < classes[i] {
            out[i] += 1;
            left -= 1;
        }
    }
    out
}

struct Engine<'a> {
    cfg: &'a SimConfig,
    pool: PoolState,
    queues: Vec<DebtQueue>,
    inline: VecDeque<DebtItem>,
    backlog: VecDeque<FgBatch>,
    /// Served write blocks per bin.
    write_history: Vec<u64>,
    /// Blocks held by each live snapshot, keyed by creation bin.
    snapshots: BTreeMap<usize, u64>,
    snap_every: usize,
    bucket_limit: u64,
    next_id: u64,
    created: [u64; 3],
    processed: [u64; 3],
    inline_items: u64,
    bin_created: [u64; 3],
    bin_processed: [u64; 3],
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a SimConfig) -> Result<Self> {
        let bucket_limit = cfg.bucket_limit();
        Ok(Self {
            cfg,
            pool: cfg.initial_pool()?,
            queues: DebtKind::ALL
                .iter()
                .map(|&k| DebtQueue::new(k, bucket_limit))
                .collect(),
            inline: VecDeque::new(),
            backlog: VecDeque::new(),
            write_history: Vec::new(),
            snapshots: BTreeMap::new(),
            snap_every: cfg.debt.snap.bins(cfg.hw.interval).0,
            bucket_limit,
            next_id: 0,
            created: [0; 3],
            processed: [0; 3],
            inline_items: 0,
            bin_created: [0; 3],
            bin_processed: [0; 3],
        })
    }

    fn held_total(&self) -> u64 {
        self.snapshots.values().sum()
    }

    fn pending_ops(&self) -> u64 {
        self.queues.iter().map(DebtQueue::pending_ops).sum::<u64>()
            + self.inline.iter().map(DebtItem::remaining_ops).sum::<u64>()
    }

    fn tied_in_queues(&self) -> u64 {
        self.queues.iter().map(DebtQueue::tied).sum::<u64>()
            + self
                .inline
                .iter()
                .map(DebtItem::remaining_tied)
                .sum::<u64>()
    }

    fn outstanding(&self, kind: DebtKind) -> u64 {
        self.queues[kind.index()].outstanding_blocks()
            + self
                .inline
                .iter()
                .filter(|i| i.kind == kind)
                .map(DebtItem::remaining_blocks)
                .sum::<u64>()
    }

    fn apply(&mut self, d: IntervalDelta, bin: usize) -> Result<()> {
        let refused = self.pool.apply_interval(d, bin)?;
        if refused > 0 {
            return Err(Error::Invariant {
                bin,
                message: format!("{refused} blocks did not fit after space admission"),
            });
        }
        Ok(())
    }

    /// Records the item as created and queues it; a full bucket sends it
    /// to the inline list. The pool must already hold its tied blocks.
    fn admit(&mut self, mut item: DebtItem) {
        item.id = self.next_id;
        self.next_id += 1;
        let k = item.kind.index();
        self.created[k] += item.blocks;
        self.bin_created[k] += item.blocks;
        let global = self.tied_in_queues();
        if let Err((item, _)) = self.queues[k].admit(item, global, self.bucket_limit) {
            self.inline_items += 1;
            self.inline.push_back(item);
        }
    }

    fn snapshot_phase(&mut self, t: usize) -> Result<()> {
        let snap = self.cfg.debt.snap;
        if snap.luns == 0 {
            return Ok(());
        }
        if let Some(created) = snap.expiring_at(self.cfg.hw.interval, t) {
            let held = self.snapshots.remove(&created).unwrap_or(0);
            let cost = self.cfg.debt.cost_per_block.of(DebtKind::SnapDelete);
            let item =
                gen_snap_delete_debt(&snap, self.cfg.hw.interval, &self.write_history, t, cost)?;
            let blocks = item.as_ref().map_or(0, |i| i.blocks);
            if blocks != held {
                return Err(Error::Invariant {
                    bin: t,
                    message: format!("snapshot hold {held} differs from expiring debt {blocks}"),
                });
            }
            if let Some(item) = item {
                self.apply(
                    IntervalDelta {
                        used_released: held,
                        tied_added: held,
                        ..IntervalDelta::default()
                    },
                    t,
                )?;
                self.admit(item);
            }
        }
        if t.is_multiple_of(self.snap_every) {
            self.snapshots.insert(t, 0);
        }
        Ok(())
    }

    /// Serves the backlog with `cap` ops; returns (served, latency, oor)
    /// where the last two count only ops that arrived in bin `t`.
    fn serve(&mut self, t: usize, mut cap: u64) -> Result<(u64, u64, u64)> {
        let luns = self.cfg.debt.snap.luns as u64;
        let bs = self.cfg.debt.block_size;
        let dmd = self.cfg.debt.dmd_ratio;
        let costs = self.cfg.debt.cost_per_block;
        let (mut served, mut latency, mut oor) = (0, 0, 0);
        let mut idx = 0;
        while idx < self.backlog.len() {
            let b = self.backlog[idx];
            let hold = 1 + luns * self.snapshots.len() as u64;
            let free = self.pool.free_blocks();
            let w_ok = max_fitting(b.writes, |w| b.write_share(w).0 * hold <= free);
            let free_after = free - b.write_share(w_ok).0 * hold;
            let movable = self.pool.used_blocks - self.held_total();
            let unmap_need = |m: u64| {
                let len = b.unmap_share(m);
                unmap_blocks(len, bs, dmd).saturating_sub((len / bs).min(movable))
            };
            let m_ok = max_fitting(b.unmaps, |m| unmap_need(m) <= free_after);
            let eligible = b.reads + w_ok + m_ok;
            let k = cap.min(eligible);
            let [r_s, w_s, m_s] = proportional(k, [b.reads, w_ok, m_ok]);
            cap -= k;
            served += k;
            if b.arrival == t {
                oor += (b.writes - w_ok) + (b.unmaps - m_ok);
                latency += eligible - k;
            }

            let (wb, ub) = b.write_share(w_s);
            let len = b.unmap_share(m_s);
            let entry = &mut self.backlog[idx];
            entry.reads -= r_s;
            entry.writes -= w_s;
            entry.write_blocks -= wb;
            entry.unique_blocks -= ub;
            entry.unmaps -= m_s;
            entry.unmap_len -= len;
            let done = entry.ops() == 0;

            if wb > 0 {
                let overwrite = wb - ub;
                let held = luns * self.snapshots.len() as u64 * wb;
                for h in self.snapshots.values_mut() {
                    *h += luns * wb;
                }
                self.write_history.resize(t + 1, 0);
                self.write_history[t] += wb;
                self.apply(
                    IntervalDelta {
                        used_added: ub + held,
                        tied_added: overwrite,
                        ..IntervalDelta::default()
                    },
                    t,
                )?;
                if overwrite > 0 {
                    self.admit(DebtItem::new(
                        DebtKind::OverwriteGc,
                        overwrite,
                        t,
                        costs.overwrite_gc,
                    ));
                }
            }
            if len > 0 {
                let blocks = unmap_blocks(len, bs, dmd);
                let moved = (len / bs).min(self.pool.used_blocks - self.held_total());
                self.apply(
                    IntervalDelta {
                        used_released: moved,
                        tied_added: blocks,
                        ..IntervalDelta::default()
                    },
                    t,
                )?;
                if blocks > 0 {
                    self.admit(DebtItem::new(DebtKind::Unmap, blocks, t, costs.unmap));
                }
            }

            if done {
                self.backlog.remove(idx);
            } else {
                idx += 1;
            }
        }
        Ok((served, latency, oor))
    }

    /// Inline items first, then weighted round-robin over the queues.
    fn drain(&mut self, t: usize, budget: u64) -> Result<u64> {
        let mut used = 0;
        let mut released = Progress::default();
        while used < budget {
            let Some(head) = self.inline.front_mut() else {
                break;
            };
            let p = head.process(budget - used);
            used += p.ops;
            self.processed[head.kind.index()] += p.blocks;
            self.bin_processed[head.kind.index()] += p.blocks;
            released += p;
            if head.is_done() {
                self.inline.pop_front();
            }
        }
        let out = dispatch(&mut self.queues, budget - used);
        used += out.ops_used;
        for k in DebtKind::ALL {
            let p = out.of(k);
            self.processed[k.index()] += p.blocks;
            self.bin_processed[k.index()] += p.blocks;
            released += p;
        }
        self.apply(
            IntervalDelta {
                tied_released: released.tied,
                ..IntervalDelta::default()
            },
            t,
        )?;
        Ok(used)
    }

    fn check(&self, t: usize) -> Result<()> {
        if self.pool.occupied() > self.pool.total_blocks {
            return Err(Error::Invariant {
                bin: t,
                message: "pool occupancy exceeds capacity".into(),
            });
        }
        if self.pool.debt_tied_blocks != self.tied_in_queues() {
            return Err(Error::Invariant {
                bin: t,
                message: format!(
                    "pool tied {} differs from queued tied {}",
                    self.pool.debt_tied_blocks,
                    self.tied_in_queues()
                ),
            });
        }
        if self.held_total() > self.pool.used_blocks {
            return Err(Error::Invariant {
                bin: t,
                message: "snapshot holds exceed used blocks".into(),
            });
        }
        Ok(())
    }

    fn projection_start(&self, t: usize) -> ProjectionStart {
        ProjectionStart {
            bin: t,
            total_blocks: self.pool.total_blocks,
            used: self.pool.used_blocks as f64,
            tied: self.pool.debt_tied_blocks as f64,
            pending_ops: self.pending_ops() as f64,
            snapshots: self
                .snapshots
                .iter()
                .map(|(&c, &h)| (c, h as f64))
                .collect(),
        }
    }
}

/// Replays `series` under `cfg.policy`.
pub fn run(
    series: &IntensitySeries,
    cfg: &SimConfig,
    source: &ForecastSource,
) -> Result<SimMetrics> {
    cfg.validate()?;
    if (series.interval - cfg.hw.interval).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "series interval {} differs from hardware interval {}",
            series.interval, cfg.hw.interval
        )));
    }
    let n = series.len();
    let bpd = series.bins_per_day();
    let train_bins = bpd.map_or(0, |b| (cfg.dynamic.train_days * b as f64).round() as usize);

    let models = match (cfg.policy, source) {
        (PolicyKind::Fixed, _) => None,
        (PolicyKind::Dynamic, ForecastSource::Models(m)) => Some(m.clone()),
        (PolicyKind::Dynamic, ForecastSource::TrainPrefix) => {
            if bpd.is_none() {
                return Err(Error::Config(format!(
                    "interval {} does not divide a day",
                    series.interval
                )));
            }
            if train_bins > n {
                return Err(Error::InsufficientHistory {
                    needed: format!("{} training bins", train_bins),
                    available: format!("{n} bins"),
                });
            }
            Some(ChannelModels::fit(
                &series.slice(0, train_bins),
                &cfg.dynamic.forecast,
            )?)
        }
    };
    let horizon_bins = bpd.map_or(n, |b| {
        ((cfg.dynamic.horizon_days * b as f64).round() as usize).max(1)
    });

    let mut eng = Engine::new(cfg)?;
    let mut fixed = cfg.fixed;
    let mut plan: Option<SchedulePlan> = None;
    let mut metrics = SimMetrics {
        policy: cfg.policy,
        measured_from: if cfg.exclude_warmup && cfg.policy == PolicyKind::Dynamic {
            train_bins.min(n)
        } else {
            0
        },
        totals: SimTotals::default(),
        slo_violation_fraction: 0.0,
        queued_oor_fraction: 0.0,
        violating_interval_fraction: 0.0,
        oor_interval_fraction: 0.0,
        depletion_plans: 0,
        records: Vec::with_capacity(n),
        ledger: Vec::with_capacity(3 * n),
        plan: Vec::new(),
    };
    let fg_per_core = cfg.hw.fg_ops_per_core();
    let bg_per_core = cfg.hw.bg_ops_per_core();

    for (t, bin) in series.bins.iter().enumerate() {
        eng.bin_created = [0; 3];
        eng.bin_processed = [0; 3];
        eng.write_history.resize(t + 1, 0);
        eng.snapshot_phase(t)?;

        let arrivals = FgBatch::from_bin(t, bin);
        let offered = arrivals.ops();
        if offered > 0 {
            eng.backlog.push_back(arrivals);
        }
        let demand: u64 = eng.backlog.iter().map(FgBatch::ops).sum();
        let cff = match cfg.policy {
            PolicyKind::Fixed => fixed.mandatory_cores(eng.pool.tied_fraction(), cfg.hw.n_cores),
            PolicyKind::Dynamic => {
                let models = models.as_ref().expect("dynamic policy has models");
                let stale = plan.as_ref().is_none_or(|p| p.get(t).is_none());
                if t % cfg.dynamic.replan_every == 0 || stale {
                    let h = horizon_bins.min(n - t);
                    let forecast = models.forecast_at(t, h)?;
                    let p = dynamic_bucket_planner(
                        &eng.projection_start(t),
                        &forecast,
                        &cfg.hw,
                        &cfg.debt,
                        cfg.hard_limit,
                    );
                    if p.any_depleted() {
                        metrics.depletion_plans += 1;
                    }
                    plan = Some(p);
                }
                let entry: PlanBin = *plan
                    .as_ref()
                    .and_then(|p| p.get(t))
                    .expect("plan covers bin");
                metrics.plan.push(entry);
                entry.alloc.cff
            }
        };
        let alloc = allocate_cores(demand as f64 / cfg.hw.interval, &cfg.hw, cff, t);

        let cap = alloc.c_fg as u64 * fg_per_core;
        let (served, latency, oor) = eng.serve(t, cap)?;
        let bg_budget = alloc.c_bg as u64 * bg_per_core;
        let bg_ops = eng.drain(t, bg_budget)?;
        eng.check(t)?;

        for k in DebtKind::ALL {
            metrics.ledger.push(LedgerRow {
                bin: t,
                kind: k,
                created_blocks: eng.bin_created[k.index()],
                processed_blocks: eng.bin_processed[k.index()],
                outstanding_blocks: eng.outstanding(k),
                tied_blocks: eng.queues[k.index()].tied()
                    + eng
                        .inline
                        .iter()
                        .filter(|i| i.kind == k)
                        .map(DebtItem::remaining_tied)
                        .sum::<u64>(),
                pool_used: eng.pool.used_blocks,
                pool_free: eng.pool.free_blocks(),
            });
        }
        metrics.records.push(BinRecord {
            bin: t,
            offered,
            served,
            queued_latency: latency,
            queued_oor: oor,
            backlog: eng.backlog.iter().map(FgBatch::ops).sum(),
            pool_used: eng.pool.used_blocks,
            debt_tied: eng.pool.debt_tied_blocks,
            pool_total: eng.pool.total_blocks,
            c_fg: alloc.c_fg,
            c_bg: alloc.c_bg,
            cff: alloc.cff,
            bg_budget,
            bg_ops,
            debt_created: eng.bin_created.iter().sum(),
            debt_processed: eng.bin_processed.iter().sum(),
        });
    }

    let created: u64 = eng.created.iter().sum();
    let processed: u64 = eng.processed.iter().sum();
    let outstanding: u64 = DebtKind::ALL.iter().map(|&k| eng.outstanding(k)).sum();
    if created != processed + outstanding {
        return Err(Error::Invariant {
            bin: n.saturating_sub(1),
            message: format!(
                "debt created {created} != processed {processed} + outstanding {outstanding}"
            ),
        });
    }
    metrics.summarize();
    let t = &mut metrics.totals;
    t.debt_created = created;
    t.debt_processed = processed;
    t.debt_outstanding = outstanding;
    t.debt_created_by_kind = DebtKind::ALL
        .iter()
        .map(|&k| (k, eng.created[k.index()]))
        .collect();
    t.inline_items = eng.inline_items;
    Ok(metrics)
}
