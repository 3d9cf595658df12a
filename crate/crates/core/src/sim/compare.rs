use serde::Serialize;

use super::config::{PolicyKind, SimConfig};
use super::engine::{run, ForecastSource};
use super::metrics::SimMetrics;
use crate::error::Result;
use crate::trace::IntensitySeries;

/// Both policies replayed on one trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub fixed: SimMetrics,
    pub dynamic: SimMetrics,
    /// Fixed over dynamic SLO violation fraction. `None` when only the
    /// dynamic run is violation free.
    pub reduction_ratio: Option<f64>,
    /// Neither run violated the SLO; the ratio is reported as 1.
    pub degenerate: bool,
}

fn ratio(fixed: f64, dynamic: f64) -> (Option<f64>, bool) {
    match (fixed > 0.0, dynamic > 0.0) {
        (false, false) => (Some(1.0), true),
        (true, false) => (None, false),
        _ => (Some(fixed / dynamic), false),
    }
}

/// Runs both policies on `series` in parallel; `cfg.policy` is ignored.
pub fn compare_policies(
    series: &IntensitySeries,
    cfg: &SimConfig,
    source: &ForecastSource,
) -> Result<Comparison> {
    let fixed_cfg = cfg.with_policy(PolicyKind::Fixed);
    let dynamic_cfg = cfg.with_policy(PolicyKind::Dynamic);
    let (fixed, dynamic) = std::thread::scope(|s| {
        let f = s.spawn(|| run(series, &fixed_cfg, source));
        let d = run(series, &dynamic_cfg, source);
        (f.join().expect("fixed-policy replay panicked"), d)
    });
    let (fixed, dynamic) = (fixed?, dynamic?);
    let (reduction_ratio, degenerate) =
        ratio(fixed.slo_violation_fraction, dynamic.slo_violation_fraction);
    Ok(Comparison {
        fixed,
        dynamic,
        reduction_ratio,
        degenerate,
    })
}
