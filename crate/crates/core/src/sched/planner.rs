//! Forecast-driven bucket planner.
//!
//! The plan starts with BG on the cores the forecast foreground load leaves
//! idle and the bucket at the hard limit. Each pass projects the forecast;
//! at the first bin over the limit it works out the missing drain ops and
//! moves one more core from foreground to BG in that many of the cheapest
//! earlier bins (lowest forecast demand) where extra budget would actually
//! drain something. Passes stop when the projection is safe, when no bin
//! can take more drain, or after `2N` passes.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::hardware::{allocate_cores, CoreAllocation, HardwareModel};
use super::projection::{project, DebtParams, Projection, ProjectionStart};
use crate::error::Result;
use crate::forecast::ChannelForecast;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanBin {
    pub alloc: CoreAllocation,
    /// BG cores in this bin: idle cores plus the ones taken from foreground.
    pub planned_bg_cores: u32,
    pub bucket_limit_blocks: u64,
    /// Drain quota in BG ops.
    pub drain_ops: u64,
    /// Projected occupancy stays above the hard limit.
    pub depleted: bool,
    /// The plan steals cores the forecast foreground load needs.
    pub oversubscribed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulePlan {
    pub start_bin: usize,
    pub hard_limit: f64,
    pub passes: usize,
    pub bins: Vec<PlanBin>,
}

impl SchedulePlan {
    pub fn horizon(&self) -> usize {
        self.bins.len()
    }

    pub fn get(&self, bin: usize) -> Option<&PlanBin> {
        bin.checked_sub(self.start_bin)
            .and_then(|i| self.bins.get(i))
    }

    pub fn any_depleted(&self) -> bool {
        self.bins.iter().any(|b| b.depleted)
    }

    pub fn total_drain_ops(&self) -> u64 {
        self.bins.iter().map(|b| b.drain_ops).sum()
    }

    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record([
            "bin",
            "c_fg",
            "c_bg",
            "cff",
            "bucket_limit_blocks",
            "drain_ops",
            "flags",
        ])?;
        for b in &self.bins {
            let mut flags = Vec::new();
            if b.depleted {
                flags.push("depleted");
            }
            if b.oversubscribed {
                flags.push("oversubscribed");
            }
            w.write_record([
                b.alloc.bin.to_string(),
                b.alloc.c_fg.to_string(),
                b.alloc.c_bg.to_string(),
                b.alloc.cff.to_string(),
                b.bucket_limit_blocks.to_string(),
                b.drain_ops.to_string(),
                flags.join("|"),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Builds a plan over the whole `forecast`.
pub fn dynamic_bucket_planner(
    start: &ProjectionStart,
    forecast: &ChannelForecast,
    hw: &HardwareModel,
    debt: &DebtParams,
    hard_limit: f64,
) -> SchedulePlan {
    let n = forecast.len();
    let per_core = hw.bg_ops_per_core() as f64;
    let fg_cores: Vec<u32> = forecast
        .total_iops
        .iter()
        .map(|&d| hw.cores_for_ops(d).min(hw.n_cores))
        .collect();
    let spare: Vec<u32> = fg_cores.iter().map(|&c| hw.n_cores - c).collect();
    // BG always gets the cores foreground leaves idle; passes only add
    // cores taken from foreground.
    let mut planned = spare.clone();
    let run = |planned: &[u32]| -> Projection {
        project(start, forecast, n, hw, debt, |i, _| {
            planned[i] as f64 * per_core
        })
    };

    let mut passes = 0;
    let mut proj = run(&planned);
    while passes < 2 * hw.n_cores as usize {
        let Some(b) = proj.first_above(hard_limit) else {
            break;
        };
        passes += 1;
        let excess_blocks = (proj.occupancy[b] - hard_limit) * start.total_blocks as f64;
        let ops_per_block = if proj.tied[b] > 0.0 {
            proj.pending_ops[b] / proj.tied[b]
        } else {
            1.0
        };
        let needed_ops = excess_blocks * ops_per_block;
        let mut candidates: Vec<usize> = (0..=b)
            .filter(|&i| proj.budget_limited[i] && planned[i] < hw.n_cores)
            .collect();
        if candidates.is_empty() {
            break;
        }
        candidates.sort_by(|&x, &y| {
            forecast.total_iops[x]
                .total_cmp(&forecast.total_iops[y])
                .then(planned[x].cmp(&planned[y]))
                .then(x.cmp(&y))
        });
        let k = ((needed_ops / per_core).ceil() as usize).clamp(1, candidates.len());
        for &i in &candidates[..k] {
            planned[i] += 1;
        }
        proj = run(&planned);
    }

    let bucket = (hard_limit * start.total_blocks as f64).floor() as u64;
    let bins = (0..n)
        .map(|i| {
            let cff = planned[i] - spare[i];
            let alloc =
                allocate_cores(forecast.total_iops[i] / hw.interval, hw, cff, start.bin + i);
            PlanBin {
                alloc,
                planned_bg_cores: planned[i],
                bucket_limit_blocks: bucket,
                drain_ops: proj.drained[i].round() as u64,
                depleted: proj.occupancy[i] > hard_limit,
                oversubscribed: cff > 0 && fg_cores[i] > 0,
            }
        })
        .collect();
    SchedulePlan {
        start_bin: start.bin,
        hard_limit,
        passes,
        bins,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::debt::SnapPolicy;
    use crate::sched::projection::tests::flat_forecast;

    fn no_snaps() -> DebtParams {
        DebtParams {
            snap: SnapPolicy {
                luns: 0,
                ..SnapPolicy::default()
            },
            ..DebtParams::default()
        }
    }

    #[test]
    fn safe_forecast_needs_no_plan() {
        let hw = HardwareModel::default();
        let f = flat_forecast(100, 30_000.0 * 20.0, 1000.0, 0.5);
        let plan = dynamic_bucket_planner(
            &ProjectionStart::empty_pool(0, 1 << 32, 1 << 20),
            &f,
            &hw,
            &no_snaps(),
            0.95,
        );
        assert_eq!(plan.passes, 0);
        assert!(plan
            .bins
            .iter()
            .all(|b| b.planned_bg_cores == 44 && b.alloc.cff == 0));
        assert!(!plan.any_depleted());
        assert!(plan
            .bins
            .iter()
            .all(|b| b.bucket_limit_blocks <= (0.95 * (1u64 << 32) as f64) as u64));
    }

    /// Day/night demand: bins 0..36 idle, then foreground takes every core
    /// while overwrites pile up.
    fn valley_forecast() -> ChannelForecast {
        let mut f = flat_forecast(100, 0.0, 0.0, 1.0);
        for i in 36..100 {
            f.total_iops[i] = 64.0 * 30_000.0;
            f.write_blocks[i] = 40_000.0;
            f.unique_fraction[i] = 0.0;
        }
        f
    }

    #[test]
    fn drain_lands_in_the_valley() {
        let hw = HardwareModel::default();
        let total = 10_000_000u64;
        let start = ProjectionStart {
            tied: 4_000_000.0,
            pending_ops: 4_000_000.0,
            ..ProjectionStart::empty_pool(0, total, 4_500_000)
        };
        let f = valley_forecast();
        let plan = dynamic_bucket_planner(&start, &f, &hw, &no_snaps(), 0.95);
        assert!(!plan.any_depleted(), "passes {}", plan.passes);
        let in_valley: u64 = plan.bins[..36].iter().map(|b| b.drain_ops).sum();
        assert!(in_valley as f64 >= 0.9 * plan.total_drain_ops() as f64);
        let p = project(&start, &f, f.len(), &hw, &no_snaps(), |i, _| {
            plan.bins[i].planned_bg_cores as f64 * hw.bg_ops_per_core() as f64
        });
        assert!(p.occupancy.iter().all(|&u| u <= 0.95));
    }

    #[test]
    fn single_choice_bin_takes_all_drain() {
        // Bin 0 is the only bin with idle cores before the pool fills at bin 3.
        let hw = HardwareModel::default();
        let start = ProjectionStart {
            tied: 100_000.0,
            pending_ops: 100_000.0,
            ..ProjectionStart::empty_pool(0, 1_000_000, 800_000)
        };
        let mut f = flat_forecast(5, 64.0 * 30_000.0, 0.0, 1.0);
        f.total_iops[0] = 0.0;
        f.write_blocks[3] = 100_000.0;
        let plan = dynamic_bucket_planner(&start, &f, &hw, &no_snaps(), 0.95);
        assert!(!plan.any_depleted());
        assert!(plan.bins[0].drain_ops >= 50_000);
        assert_eq!(plan.total_drain_ops(), plan.bins[0].drain_ops);
        assert!(plan.bins.iter().all(|b| !b.oversubscribed));
    }

    #[test]
    fn infeasible_plan_is_flagged() {
        let hw = HardwareModel::default();
        let f = flat_forecast(10, 64.0 * 30_000.0, 5_000_000.0, 1.0);
        let plan = dynamic_bucket_planner(
            &ProjectionStart::empty_pool(0, 10_000_000, 0),
            &f,
            &hw,
            &no_snaps(),
            0.95,
        );
        assert!(plan.any_depleted());
        assert!(plan.passes <= 128);
    }

    #[test]
    fn plan_csv_has_one_row_per_bin() {
        let hw = HardwareModel::default();
        let plan = dynamic_bucket_planner(
            &ProjectionStart::empty_pool(5, 1000, 0),
            &flat_forecast(3, 0.0, 0.0, 1.0),
            &hw,
            &no_snaps(),
            0.95,
        );
        let mut buf = Vec::new();
        plan.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().nth(1).unwrap().starts_with("5,0,64,0,950,0,"));
    }
}
