//! Capacity forecast factor: cores stolen from foreground so the pool
//! survives until the next long idle phase.

use serde::{Deserialize, Serialize};

use super::hardware::HardwareModel;
use super::projection::{cff_budget, project, DebtParams, ProjectionStart};
use crate::forecast::ChannelForecast;

/// A long idle phase is at least `min_bins` consecutive bins whose forecast
/// foreground demand stays below `demand_fraction` of full FG capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdleDef {
    pub min_bins: usize,
    pub demand_fraction: f64,
}

impl Default for IdleDef {
    fn default() -> Self {
        Self {
            min_bins: 12,
            demand_fraction: 0.3,
        }
    }
}

/// First bin of the first long idle phase in `demand` (ops per bin).
pub fn next_idle_start(demand: &[f64], hw: &HardwareModel, idle: &IdleDef) -> Option<usize> {
    let threshold = idle.demand_fraction * hw.n_cores as f64 * hw.fg_ops_per_core() as f64;
    let mut run = 0;
    for (i, &d) in demand.iter().enumerate() {
        if d < threshold {
            run += 1;
            if run >= idle.min_bins.max(1) {
                return Some(i + 1 - run);
            }
        } else {
            run = 0;
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CffDecision {
    pub cff: u32,
    /// Bins checked: up to the next long idle phase or the whole forecast.
    pub horizon: usize,
    /// Even `cff = N` does not keep the pool under the limit.
    pub depletion: bool,
    /// Bins in the horizon where the stolen cores leave forecast
    /// foreground demand under-served.
    pub oversubscribed_bins: usize,
}

/// Whether a constant `cff` keeps projected occupancy at or below
/// `hard_limit` for the first `horizon` bins.
pub fn cff_is_safe(
    cff: u32,
    start: &ProjectionStart,
    forecast: &ChannelForecast,
    horizon: usize,
    hw: &HardwareModel,
    debt: &DebtParams,
    hard_limit: f64,
) -> bool {
    project(start, forecast, horizon, hw, debt, cff_budget(hw, cff))
        .occupancy
        .iter()
        .all(|&u| u <= hard_limit)
}

/// Smallest safe `cff ∈ [0, N]`, found by bisection (safety is monotone in
/// `cff`: more BG cores never drain less).
pub fn compute_cff(
    start: &ProjectionStart,
    forecast: &ChannelForecast,
    hw: &HardwareModel,
    debt: &DebtParams,
    idle: &IdleDef,
    hard_limit: f64,
) -> CffDecision {
    let horizon = next_idle_start(&forecast.total_iops, hw, idle).unwrap_or(forecast.len());
    let safe = |c| cff_is_safe(c, start, forecast, horizon, hw, debt, hard_limit);
    let (cff, depletion) = if safe(0) {
        (0, false)
    } else if !safe(hw.n_cores) {
        (hw.n_cores, true)
    } else {
        let (mut lo, mut hi) = (0, hw.n_cores);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if safe(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        (hi, false)
    };
    let oversubscribed_bins = if cff == 0 {
        0
    } else {
        forecast.total_iops[..horizon]
            .iter()
            .filter(|&&d| hw.cores_for_ops(d) > 0)
            .count()
    };
    CffDecision {
        cff,
        horizon,
        depletion,
        oversubscribed_bins,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::debt::SnapPolicy;
    use crate::sched::projection::tests::flat_forecast;
    use proptest::prelude::*;

    fn no_snaps() -> DebtParams {
        DebtParams {
            snap: SnapPolicy {
                luns: 0,
                ..SnapPolicy::default()
            },
            ..DebtParams::default()
        }
    }

    /// Brute-force oracle: the first safe value in a linear sweep.
    fn sweep(
        start: &ProjectionStart,
        f: &ChannelForecast,
        hw: &HardwareModel,
        debt: &DebtParams,
    ) -> Option<u32> {
        let horizon = next_idle_start(&f.total_iops, hw, &IdleDef::default()).unwrap_or(f.len());
        (0..=hw.n_cores).find(|&c| cff_is_safe(c, start, f, horizon, hw, debt, 0.95))
    }

    #[test]
    fn idle_phase_detection() {
        let hw = HardwareModel::default();
        let busy = 0.5 * 64.0 * 30_000.0;
        let mut d = vec![busy; 40];
        d[5..15].fill(0.0);
        d[20..].fill(0.0);
        assert_eq!(next_idle_start(&d, &hw, &IdleDef::default()), Some(20));
        assert_eq!(next_idle_start(&[busy; 40], &hw, &IdleDef::default()), None);
    }

    #[test]
    fn light_load_needs_no_cff() {
        let hw = HardwareModel::default();
        let f = flat_forecast(50, 1000.0, 100.0, 0.5);
        let d = compute_cff(
            &ProjectionStart::empty_pool(0, 1 << 30, 1 << 26),
            &f,
            &hw,
            &no_snaps(),
            &IdleDef::default(),
            0.95,
        );
        assert_eq!(d.cff, 0);
        assert!(!d.depletion);
    }

    #[test]
    fn depleting_forecast_needs_exact_cff() {
        // 60 cores of FG demand leave 4 BG cores (48k ops/bin); overwrites
        // add 150k debt blocks per bin.
        let hw = HardwareModel::default();
        let f = flat_forecast(20, 60.0 * 30_000.0, 150_000.0, 0.0);
        let start = ProjectionStart {
            tied: 3_000_000.0,
            pending_ops: 3_000_000.0,
            ..ProjectionStart::empty_pool(0, 6_000_000, 2_500_000)
        };
        let d = compute_cff(&start, &f, &hw, &no_snaps(), &IdleDef::default(), 0.95);
        assert!(d.cff > 0 && !d.depletion);
        assert_eq!(Some(d.cff), sweep(&start, &f, &hw, &no_snaps()));
        assert!(!cff_is_safe(
            d.cff - 1,
            &start,
            &f,
            d.horizon,
            &hw,
            &no_snaps(),
            0.95
        ));
        assert_eq!(d.oversubscribed_bins, 20);
    }

    #[test]
    fn infeasible_forecast_flags_depletion() {
        let hw = HardwareModel::default();
        let f = flat_forecast(20, 60.0 * 30_000.0, 2_000_000.0, 0.0);
        let start = ProjectionStart::empty_pool(0, 10_000_000, 5_000_000);
        let d = compute_cff(&start, &f, &hw, &no_snaps(), &IdleDef::default(), 0.95);
        assert_eq!(d.cff, 64);
        assert!(d.depletion);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]
        #[test]
        fn bisection_matches_sweep(
            demand_cores in 0u32..70,
            wb in 0.0f64..400_000.0,
            u in 0.0f64..1.0,
            used in 0.0f64..0.6,
            tied in 0.0f64..0.4,
            luns in 0u32..4,
            bins in 6usize..40,
        ) {
            let hw = HardwareModel::default();
            let debt = DebtParams {
                snap: SnapPolicy { luns, ..SnapPolicy::default() },
                ..DebtParams::default()
            };
            let total = 20_000_000u64;
            let f = flat_forecast(bins, demand_cores as f64 * 30_000.0, wb, u);
            let start = ProjectionStart {
                tied: tied * total as f64,
                pending_ops: tied * total as f64,
                ..ProjectionStart::empty_pool(3, total, (used * total as f64) as u64)
            };
            let d = compute_cff(&start, &f, &hw, &debt, &IdleDef::default(), 0.95);
            match sweep(&start, &f, &hw, &debt) {
                Some(c) => {
                    prop_assert_eq!(d.cff, c);
                    prop_assert!(!d.depletion);
                    if c > 0 {
                        prop_assert!(!cff_is_safe(c - 1, &start, &f, d.horizon, &hw, &debt, 0.95));
                    }
                }
                None => {
                    prop_assert_eq!(d.cff, hw.n_cores);
                    prop_assert!(d.depletion);
                }
            }
        }
    }
}
