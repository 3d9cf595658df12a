use std::collections::BTreeSet;

use bgsched::forecast::{backtest, ChannelModels, ForecastMethod, HwParams, Split};
use serde::Serialize;

use super::{prepare, with_sweep, Report};
use crate::args::{ForecastArgs, MethodArg};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::input::load_series;
use crate::output::Outputs;

#[derive(Debug, Serialize)]
struct ErrorReport {
    method: ForecastMethod,
    smape: f64,
    mpe: Option<f64>,
    mpe_excluded: usize,
    cumulative_error: f64,
    max_abs_error: f64,
    split: Split,
    unknown_labels: BTreeSet<String>,
    hw_params: Option<HwParams>,
    seed: u64,
}

pub fn forecast(args: &ForecastArgs) -> CliResult<Report> {
    let mut cfg = prepare(&args.common, Some(&args.input))?;
    if let Some(m) = args.method {
        cfg.forecast.method = match m {
            MethodArg::Ewma => ForecastMethod::Ewma,
            MethodArg::HoltWinters => ForecastMethod::HoltWinters,
        };
    }
    if let Some(d) = args.train_days {
        cfg.forecast.train_days = d;
    }
    if args.test_start_day.is_some() {
        cfg.forecast.test_start_day = args.test_start_day;
    }
    if let Some(d) = args.test_days {
        cfg.forecast.test_days = d;
    }
    with_sweep(&args.sweep, cfg, &args.common.out, |cfg, out| {
        run_one(args, cfg, out)
    })
}

fn run_one(args: &ForecastArgs, cfg: RunConfig, out: &std::path::Path) -> CliResult<Report> {
    let seed = cfg.seed.unwrap_or_default();
    let mut outputs = Outputs::new(out)?;
    let mut report = Report::default();
    let series = load_series(
        &args.input,
        &cfg,
        args.common.interval,
        seed,
        &mut report.warnings,
    )?;
    let bpd = series.bins_per_day().ok_or_else(|| {
        CliError::config(format!(
            "bin width {} s does not divide a day",
            series.interval
        ))
    })?;
    let f = &cfg.forecast;
    let split = Split::from_days(bpd, f.train_days, f.test_start_day, f.test_days)?;
    let bt = backtest(
        &series.total_iops(),
        bpd,
        split,
        f.method,
        &f.ewma,
        f.damped,
    )?;

    let mut csv = String::from("bin,actual,predicted,error\n");
    for (i, ((a, p), e)) in bt
        .actual
        .iter()
        .zip(&bt.predicted)
        .zip(&bt.errors.per_bin_error)
        .enumerate()
    {
        csv.push_str(&format!("{},{a:?},{p:?},{e:?}\n", split.test_start + i));
    }
    outputs.add("forecast.csv", csv.into_bytes());
    let errors = ErrorReport {
        method: bt.method,
        smape: bt.errors.smape,
        mpe: bt.errors.mpe,
        mpe_excluded: bt.errors.mpe_excluded,
        cumulative_error: bt.errors.cumulative_error,
        max_abs_error: bt.errors.max_abs_error(),
        split,
        unknown_labels: bt.unknown_labels.clone(),
        hw_params: bt.hw_params,
        seed,
    };
    outputs.add_json("errors.json", &errors)?;
    // Per-channel models for `simulate --model`.
    if f.method == ForecastMethod::Ewma {
        let models = ChannelModels::fit(&series.slice(0, split.train_bins), &f.ewma)?;
        outputs.add_json("model.json", &models)?;
    }

    if !bt.unknown_labels.is_empty() {
        report.warnings.push(format!(
            "test days with labels unseen in training fell back to the nearest cluster: {:?}",
            bt.unknown_labels
        ));
    }
    report.lines.push(format!(
        "{:?}: SMAPE {:.3}%, MPE {}, cumulative error {:.1}",
        bt.method,
        errors.smape,
        errors.mpe.map_or("n/a".to_string(), |m| format!("{m:.3}%")),
        errors.cumulative_error
    ));
    outputs.commit()?;
    Ok(report)
}
