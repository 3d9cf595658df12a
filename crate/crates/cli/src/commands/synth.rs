use bgsched::trace::{synthesize_series, synthesize_trace, write_trace};
use serde::Serialize;

use super::{prepare, Report};
use crate::args::SynthArgs;
use crate::error::CliResult;
use crate::input::synth_profile;
use crate::output::Outputs;

#[derive(Debug, Serialize)]
struct SynthSummary<'a> {
    profile: &'a str,
    seed: u64,
    bins: usize,
    records: Option<usize>,
    settings: &'a bgsched::trace::SyntheticProfile,
}

pub fn synth(args: &SynthArgs) -> CliResult<Report> {
    let mut cfg = prepare(&args.common, None)?;
    let seed = cfg.apply_seed(None);
    let mut profile = synth_profile(&args.synth, &cfg)?;
    if let Some(i) = args.common.interval {
        profile.interval = i;
    }
    let mut outputs = Outputs::new(&args.common.out)?;
    let series = synthesize_series(&profile, seed)?;
    outputs.add_with("series.csv", |w| series.write_csv(w))?;
    let records = if args.records {
        let records = synthesize_trace(&profile, seed)?;
        outputs.add_with("trace.csv", |w| write_trace(&records, w))?;
        Some(records.len())
    } else {
        None
    };
    outputs.add_json(
        "synth.json",
        &SynthSummary {
            profile: &args.synth,
            seed,
            bins: series.len(),
            records,
            settings: &profile,
        },
    )?;
    outputs.commit()?;
    Ok(Report {
        lines: vec![format!(
            "{} bins{}",
            series.len(),
            records.map_or(String::new(), |r| format!(", {r} records"))
        )],
        warnings: Vec::new(),
    })
}
