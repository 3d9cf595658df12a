use bgsched::forecast::decompose_additive;
use bgsched::trace::{autocorrelation, partial_autocorrelation, Correlogram};
use serde::Serialize;

use super::{prepare, Report};
use crate::args::CharacterizeArgs;
use crate::error::CliResult;
use crate::input::load_series;
use crate::output::Outputs;

#[derive(Debug, Serialize)]
struct CharacterizeSummary {
    bins: usize,
    interval: f64,
    max_lag: usize,
    /// Dominant seasonal lag: highest interior local maximum of the ACF.
    acf_peak_lag: Option<usize>,
    /// Lag >= 1 with the largest ACF value.
    acf_argmax: Option<usize>,
    acf_degenerate: bool,
    decomposition_period: Option<usize>,
    seed: u64,
}

fn correlogram_csv(c: &Correlogram, header: [&str; 2], first_lag: usize) -> Vec<u8> {
    let mut out = format!("{},{}\n", header[0], header[1]);
    for (i, v) in c.values.iter().enumerate() {
        out.push_str(&format!("{},{v:?}\n", i + first_lag));
    }
    out.into_bytes()
}

pub fn characterize(args: &CharacterizeArgs) -> CliResult<Report> {
    let mut cfg = prepare(&args.common, Some(&args.input))?;
    let seed = cfg.apply_seed(None);
    let mut outputs = Outputs::new(&args.common.out)?;
    let mut report = Report::default();
    let series = load_series(
        &args.input,
        &cfg,
        args.common.interval,
        seed,
        &mut report.warnings,
    )?;
    outputs.add_with("series.csv", |w| series.write_csv(w))?;

    let values = series.total_iops();
    let mut summary = CharacterizeSummary {
        bins: series.len(),
        interval: series.interval,
        max_lag: 0,
        acf_peak_lag: None,
        acf_argmax: None,
        acf_degenerate: false,
        decomposition_period: None,
        seed,
    };

    if values.len() >= 2 {
        let max_lag = args.max_lag.min(values.len() - 1);
        if max_lag < args.max_lag {
            report.warnings.push(format!(
                "max lag reduced to {max_lag} for a {}-bin series",
                values.len()
            ));
        }
        let acf = autocorrelation(&values, max_lag)?;
        let pacf = partial_autocorrelation(&values, max_lag)?;
        summary.max_lag = max_lag;
        summary.acf_peak_lag = acf.peak_lag();
        summary.acf_argmax = acf.argmax_from(1);
        summary.acf_degenerate = acf.degenerate;
        outputs.add("acf.csv", correlogram_csv(&acf, ["lag", "acf"], 0));
        outputs.add("pacf.csv", correlogram_csv(&pacf, ["lag", "pacf"], 1));
    } else if !values.is_empty() {
        report
            .warnings
            .push("series too short for a correlogram".into());
    }

    let period = args.period.or(series.bins_per_day());
    match period {
        Some(p) if p >= 2 && values.len() >= 2 * p => {
            let d = decompose_additive(&values, p)?;
            let mut csv = String::from("bin,observed,trend,season,residual,trend_defined\n");
            for (t, y) in values.iter().enumerate() {
                csv.push_str(&format!(
                    "{t},{y:?},{:?},{:?},{:?},{}\n",
                    d.trend[t],
                    d.season[t % p],
                    d.residual[t],
                    d.trend_defined(t)
                ));
            }
            outputs.add("decompose.csv", csv.into_bytes());
            summary.decomposition_period = Some(p);
        }
        _ if values.is_empty() => {}
        _ => report
            .warnings
            .push("series shorter than two periods; decomposition skipped".into()),
    }

    outputs.add_json("characterize.json", &summary)?;
    report.lines.push(format!(
        "{} bins of {} s; ACF peak lag {:?}, argmax {:?}",
        summary.bins, summary.interval, summary.acf_peak_lag, summary.acf_argmax
    ));
    outputs.commit()?;
    Ok(report)
}
