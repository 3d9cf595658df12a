mod characterize;
mod forecast;
mod simulate;
mod synth;

use std::path::Path;

use rayon::prelude::*;

pub use characterize::characterize;
pub use forecast::forecast;
pub use simulate::{compare, simulate};
pub use synth::synth;

use crate::args::{CommonArgs, InputArgs, SweepArgs};
use crate::config::{parse_sweep, RunConfig};
use crate::error::{CliError, CliResult};
use crate::input::check_input;

/// What a successful command has to say.
#[derive(Debug, Default)]
pub struct Report {
    pub lines: Vec<String>,
    pub warnings: Vec<String>,
}

impl Report {
    fn merge(&mut self, prefix: &str, other: Report) {
        self.lines
            .extend(other.lines.into_iter().map(|l| format!("[{prefix}] {l}")));
        self.warnings.extend(
            other
                .warnings
                .into_iter()
                .map(|w| format!("[{prefix}] {w}")),
        );
    }
}

/// Loads the config and checks inputs before any computation. The CLI
/// seed, when given, takes precedence over the file's.
fn prepare(common: &CommonArgs, input: Option<&InputArgs>) -> CliResult<RunConfig> {
    if let Some(input) = input {
        check_input(input)?;
    }
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    cfg.seed = common.seed.or(cfg.seed);
    Ok(cfg)
}

/// Runs `run` once, or once per sweep value in parallel, each in its own
/// `<out>/<key>=<value>` directory.
fn with_sweep<F>(sweep: &SweepArgs, base: RunConfig, out: &Path, run: F) -> CliResult<Report>
where
    F: Fn(RunConfig, &Path) -> CliResult<Report> + Sync,
{
    let Some(arg) = &sweep.sweep else {
        let mut cfg = base;
        cfg.apply_seed(None);
        return run(cfg, out);
    };
    let (key, values) = parse_sweep(arg)?;
    let variants = values
        .iter()
        .map(|v| {
            let mut cfg = base.with_override(&key, v)?;
            cfg.apply_seed(None);
            Ok((format!("{key}={v}"), cfg))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let results: Vec<(String, CliResult<Report>)> = variants
        .into_par_iter()
        .map(|(name, cfg)| {
            let dir = out.join(&name);
            let r = run(cfg, &dir);
            (name, r)
        })
        .collect();

    let mut report = Report::default();
    let mut failure: Option<CliError> = None;
    for (name, r) in results {
        match r {
            Ok(sub) => report.merge(&name, sub),
            Err(e) => {
                let e = e.context(&name);
                if failure.as_ref().is_none_or(|f| e.exit > f.exit) {
                    failure = Some(e);
                }
            }
        }
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(report),
    }
}
