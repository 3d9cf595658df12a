use std::fs::File;
use std::io::BufReader;

use bgsched::trace::{
    bin_series, read_trace_file, synthesize_series, BinConfig, IntensitySeries, SyntheticProfile,
    TraceFormat,
};

use crate::args::{InputArgs, TraceFormatArg};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Fails early when a named input file is missing.
pub fn check_input(input: &InputArgs) -> CliResult<()> {
    for path in [&input.trace, &input.series].into_iter().flatten() {
        if !path.is_file() {
            return Err(CliError::config(format!(
                "input file {} does not exist",
                path.display()
            )));
        }
    }
    Ok(())
}

pub fn synth_profile(name: &str, cfg: &RunConfig) -> CliResult<SyntheticProfile> {
    match name {
        "vdi" => Ok(SyntheticProfile::default()),
        "flat" => Ok(SyntheticProfile::flat(100.0, 6.0)),
        "config" => cfg.synth.clone().ok_or_else(|| {
            CliError::config("--synth config needs a [synth] section in the config file")
        }),
        other => Err(CliError::config(format!(
            "unknown synthetic profile {other:?} (expected vdi, flat or config)"
        ))),
    }
}

/// Loads the series named by `input`. Raw traces are binned at
/// `interval` (default: the hardware interval); synthetic profiles use
/// their own bin width unless `interval` is given.
pub fn load_series(
    input: &InputArgs,
    cfg: &RunConfig,
    interval: Option<f64>,
    seed: u64,
    warnings: &mut Vec<String>,
) -> CliResult<IntensitySeries> {
    if let Some(path) = &input.trace {
        let format = match input.format {
            TraceFormatArg::Generic => TraceFormat::CsvGeneric,
            TraceFormatArg::Snia => TraceFormat::CsvSnia,
        };
        let parsed = read_trace_file(path, format, &cfg.parse_options())
            .map_err(|e| CliError::from(e).context(path.display()))?;
        if parsed.malformed > 0 {
            warnings.push(format!(
                "{}: skipped {} malformed rows (first at line {})",
                path.display(),
                parsed.malformed,
                parsed.first_malformed_line.unwrap_or(0)
            ));
        }
        if parsed.records.is_empty() {
            warnings.push(format!("{}: trace is empty", path.display()));
        }
        let bin_cfg = BinConfig {
            interval: interval.unwrap_or(cfg.sim.hw.interval),
            block_size: cfg.trace.block_size,
            dedup_window: cfg.trace.dedup_window,
            ..BinConfig::default()
        };
        return Ok(bin_series(&parsed.records, &bin_cfg)?);
    }
    if let Some(path) = &input.series {
        let file = File::open(path).map_err(|e| CliError::from(e).context(path.display()))?;
        let series = IntensitySeries::read_csv(
            BufReader::new(file),
            interval.unwrap_or(cfg.sim.hw.interval),
        )
        .map_err(|e| CliError::from(e).context(path.display()))?;
        if let Some(i) = interval {
            if (i - series.interval).abs() > 1e-9 {
                return Err(CliError::config(format!(
                    "--interval {i} differs from the series bin width {}",
                    series.interval
                )));
            }
        }
        if series.is_empty() {
            warnings.push(format!("{}: series is empty", path.display()));
        }
        return Ok(series);
    }
    let name = input.synth.as_deref().expect("clap enforces one input");
    let mut profile = synth_profile(name, cfg)?;
    if let Some(i) = interval {
        profile.interval = i;
    }
    Ok(synthesize_series(&profile, seed)?)
}
