//! Run configuration file.
//!
//! ```toml
//! seed = 7
//!
//! [trace]
//! block_size = 4096
//!
//! [forecast]
//! method = "ewma"
//! train_days = 5.0
//!
//! [sim]
//! policy = "dynamic"
//! pool_total_blocks = 340000000
//!
//! [sim.debt.snap]
//! luns = 10
//!
//! [synth]
//! days = 6.0
//! peak_iops = 2800.0
//! ```
//!
//! Every table rejects unknown keys.

use std::path::Path;

use bgsched::forecast::{ForecastConfig, ForecastMethod};
use bgsched::sim::SimConfig;
use bgsched::trace::{ParseOptions, SyntheticProfile, DEFAULT_BLOCK_SIZE, DEFAULT_DEDUP_WINDOW};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceSettings {
    pub block_size: u64,
    pub dedup_window: usize,
    pub malformed_threshold: f64,
    pub device_size: Option<u64>,
}

impl Default for TraceSettings {
    fn default() -> Self {
        let p = ParseOptions::default();
        Self {
            block_size: DEFAULT_BLOCK_SIZE,
            dedup_window: DEFAULT_DEDUP_WINDOW,
            malformed_threshold: p.malformed_threshold,
            device_size: p.device_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForecastSettings {
    pub method: ForecastMethod,
    pub train_days: f64,
    pub test_start_day: Option<f64>,
    pub test_days: f64,
    /// Damped trend for Holt-Winters.
    pub damped: bool,
    pub ewma: ForecastConfig,
}

impl Default for ForecastSettings {
    fn default() -> Self {
        Self {
            method: ForecastMethod::Ewma,
            train_days: 5.0,
            test_start_day: None,
            test_days: 1.0,
            damped: true,
            ewma: ForecastConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub trace: TraceSettings,
    pub forecast: ForecastSettings,
    pub sim: SimConfig,
    pub synth: Option<SyntheticProfile>,
}

impl RunConfig {
    /// Reads `path`, or the defaults when no file is given.
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| e.context(path.display()))
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::config(e.to_string()))
    }

    /// Sets one value by dotted path (`sim.pool_total_blocks`), with the
    /// value written as a TOML literal. `alpha` sets both EWMA smoothing
    /// factors of both forecaster configs.
    pub fn with_override(&self, key: &str, value: &str) -> CliResult<Self> {
        if key == "alpha" {
            let mut out = self.clone();
            for path in [
                "forecast.ewma.alpha_trend",
                "forecast.ewma.alpha_season",
                "sim.dynamic.forecast.alpha_trend",
                "sim.dynamic.forecast.alpha_season",
            ] {
                out = out.with_override(path, value)?;
            }
            return Ok(out);
        }
        let mut root = toml::Value::try_from(self).map_err(|e| CliError::config(e.to_string()))?;
        let literal: toml::Value = toml::from_str::<toml::Table>(&format!("v = {value}"))
            .map(|mut t| t.remove("v").expect("key present"))
            .or_else(|_| Ok::<_, CliError>(toml::Value::String(value.to_string())))?;
        let parts: Vec<&str> = key.split('.').collect();
        let (last, parents) = parts.split_last().expect("split yields one part");
        let mut node = &mut root;
        for p in parents {
            let table = node.as_table_mut().ok_or_else(|| {
                CliError::config(format!("sweep key {key:?}: {p:?} is not a table"))
            })?;
            node = table
                .entry(p.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        }
        node.as_table_mut()
            .ok_or_else(|| {
                CliError::config(format!("sweep key {key:?} does not name a table entry"))
            })?
            .insert(last.to_string(), literal);
        root.try_into()
            .map_err(|e: toml::de::Error| CliError::config(format!("sweep key {key:?}: {e}")))
    }

    /// Routes one seed into every random stream.
    pub fn apply_seed(&mut self, cli_seed: Option<u64>) -> u64 {
        let seed = cli_seed.or(self.seed).unwrap_or(0);
        self.seed = Some(seed);
        self.sim.seed = seed;
        self.sim.dynamic.forecast.seed = seed;
        self.forecast.ewma.seed = seed;
        seed
    }

    pub fn parse_options(&self) -> ParseOptions {
        ParseOptions {
            malformed_threshold: self.trace.malformed_threshold,
            device_size: self.trace.device_size,
        }
    }
}

/// Splits `key=v1,v2,...`.
pub fn parse_sweep(arg: &str) -> CliResult<(String, Vec<String>)> {
    let (key, values) = arg
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("sweep {arg:?} is not key=v1,v2,...")))?;
    let values: Vec<String> = values
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(String::from)
        .collect();
    if key.trim().is_empty() || values.is_empty() {
        return Err(CliError::config(format!(
            "sweep {arg:?} needs a key and at least one value"
        )));
    }
    Ok((key.trim().to_string(), values))
}
