use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use bgsched::forecast::ChannelModels;
use bgsched::sched::SchedulePlan;
use bgsched::sim::{
    compare_policies, run, Comparison, ForecastSource, PolicyKind, SimConfig, SimMetrics,
    SimSummary,
};
use bgsched::trace::IntensitySeries;
use serde::Serialize;

use super::{prepare, with_sweep, Report};
use crate::args::{CommonArgs, CompareArgs, InputArgs, PolicyArg, SimulateArgs};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::input::load_series;
use crate::output::Outputs;

fn load_model(path: Option<&Path>) -> CliResult<ForecastSource> {
    let Some(path) = path else {
        return Ok(ForecastSource::TrainPrefix);
    };
    let file = File::open(path)
        .map_err(|e| CliError::config(format!("cannot open model {}: {e}", path.display())))?;
    let models: ChannelModels = serde_json::from_reader(BufReader::new(file)).map_err(|e| {
        CliError::config(format!("{}: not a forecaster model: {e}", path.display()))
    })?;
    Ok(ForecastSource::Models(models))
}

/// Series plus a sim config whose bin width matches it.
fn load_run(
    input: &InputArgs,
    common: &CommonArgs,
    cfg: &RunConfig,
    report: &mut Report,
) -> CliResult<(IntensitySeries, SimConfig)> {
    let mut sim = cfg.sim.clone();
    let series = load_series(input, cfg, common.interval, sim.seed, &mut report.warnings)?;
    sim.hw.interval = series.interval;
    Ok((series, sim))
}

fn stage_run(
    outputs: &mut Outputs,
    prefix: &str,
    metrics: &SimMetrics,
    cfg: &SimConfig,
) -> CliResult<SimSummary> {
    outputs.add_with(&format!("{prefix}metrics.csv"), |w| {
        metrics.write_records_csv(w)
    })?;
    outputs.add_with(&format!("{prefix}debt_ledger.csv"), |w| {
        metrics.write_ledger_csv(w)
    })?;
    if metrics.policy == PolicyKind::Dynamic {
        let plan = SchedulePlan {
            start_bin: 0,
            hard_limit: cfg.hard_limit,
            passes: 0,
            bins: metrics.plan.clone(),
        };
        outputs.add_with(&format!("{prefix}plan.csv"), |w| plan.write_csv(w))?;
    }
    let summary = metrics.summary(cfg);
    outputs.add_json(&format!("{prefix}summary.json"), &summary)?;
    Ok(summary)
}

fn describe(m: &SimMetrics) -> String {
    format!(
        "{}: {:.4}% of offered ops violated the SLO ({:.4}% out of space), {} depletion plans",
        m.policy, m.slo_violation_fraction, m.queued_oor_fraction, m.depletion_plans
    )
}

fn run_warnings(m: &SimMetrics, report: &mut Report) {
    if m.depletion_plans > 0 {
        report.warnings.push(format!(
            "{}: {} plans could not keep the projected pool under the hard limit",
            m.policy, m.depletion_plans
        ));
    }
}

pub fn simulate(args: &SimulateArgs) -> CliResult<Report> {
    let mut cfg = prepare(&args.common, Some(&args.input))?;
    if let Some(p) = args.policy {
        cfg.sim.policy = match p {
            PolicyArg::Fixed => PolicyKind::Fixed,
            PolicyArg::Dynamic => PolicyKind::Dynamic,
        };
    }
    if let Some(d) = args.train_days {
        cfg.sim.dynamic.train_days = d;
    }
    let source = load_model(args.model.as_deref())?;
    with_sweep(&args.sweep, cfg, &args.common.out, |cfg, out| {
        let mut report = Report::default();
        let (series, sim) = load_run(&args.input, &args.common, &cfg, &mut report)?;
        let metrics = run(&series, &sim, &source)?;
        let mut outputs = Outputs::new(out)?;
        stage_run(&mut outputs, "", &metrics, &sim)?;
        run_warnings(&metrics, &mut report);
        report.lines.push(describe(&metrics));
        outputs.commit()?;
        Ok(report)
    })
}

#[derive(Debug, Serialize)]
struct ComparisonReport {
    /// Fixed over dynamic violation fraction; null when unbounded.
    reduction_ratio: Option<f64>,
    unbounded: bool,
    degenerate: bool,
    seed: u64,
    fixed: SimSummary,
    dynamic: SimSummary,
}

fn side_by_side(c: &Comparison) -> Vec<u8> {
    let mut csv = String::from(
        "bin,fixed_violations,dynamic_violations,fixed_occupancy,dynamic_occupancy,fixed_c_bg,dynamic_c_bg\n",
    );
    for (f, d) in c.fixed.records.iter().zip(&c.dynamic.records) {
        csv.push_str(&format!(
            "{},{},{},{:?},{:?},{},{}\n",
            f.bin,
            f.violations(),
            d.violations(),
            f.occupancy(),
            d.occupancy(),
            f.c_bg,
            d.c_bg
        ));
    }
    csv.into_bytes()
}

pub fn compare(args: &CompareArgs) -> CliResult<Report> {
    let mut cfg = prepare(&args.common, Some(&args.input))?;
    if let Some(d) = args.train_days {
        cfg.sim.dynamic.train_days = d;
    }
    let source = load_model(args.model.as_deref())?;
    with_sweep(&args.sweep, cfg, &args.common.out, |cfg, out| {
        let mut report = Report::default();
        let (series, sim) = load_run(&args.input, &args.common, &cfg, &mut report)?;
        let c = compare_policies(&series, &sim, &source)?;
        let mut outputs = Outputs::new(out)?;
        let fixed = stage_run(
            &mut outputs,
            "fixed/",
            &c.fixed,
            &sim.with_policy(PolicyKind::Fixed),
        )?;
        let dynamic = stage_run(
            &mut outputs,
            "dynamic/",
            &c.dynamic,
            &sim.with_policy(PolicyKind::Dynamic),
        )?;
        outputs.add("side_by_side.csv", side_by_side(&c));
        outputs.add_json(
            "comparison.json",
            &ComparisonReport {
                reduction_ratio: c.reduction_ratio,
                unbounded: c.reduction_ratio.is_none(),
                degenerate: c.degenerate,
                seed: sim.seed,
                fixed,
                dynamic,
            },
        )?;
        run_warnings(&c.dynamic, &mut report);
        report.lines.push(describe(&c.fixed));
        report.lines.push(describe(&c.dynamic));
        report.lines.push(match (c.reduction_ratio, c.degenerate) {
            (_, true) => "neither policy violated the SLO".to_string(),
            (None, _) => {
                "reduction ratio unbounded: the dynamic policy had no violations".to_string()
            }
            (Some(r), _) => format!("reduction ratio {r:.3}"),
        });
        outputs.commit()?;
        Ok(report)
    })
}
