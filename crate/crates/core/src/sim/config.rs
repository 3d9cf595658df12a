use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::debt::{check_dmd, PoolState, DEFAULT_HARD_LIMIT};
use crate::error::{Error, Result};
use crate::forecast::ForecastConfig;
use crate::sched::{DebtParams, FixedBucketPolicy, HardwareModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Fixed,
    Dynamic,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Fixed => "fixed",
            PolicyKind::Dynamic => "dynamic",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fixed" => Ok(PolicyKind::Fixed),
            "dynamic" => Ok(PolicyKind::Dynamic),
            other => Err(Error::Config(format!("unknown policy {other:?}"))),
        }
    }
}

/// Dynamic-policy planning parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicParams {
    /// Days at the start of the trace used to fit the forecaster.
    pub train_days: f64,
    /// Bins between replans.
    pub replan_every: usize,
    /// Planning horizon in days, capped at the end of the trace.
    pub horizon_days: f64,
    pub forecast: ForecastConfig,
}

impl Default for DynamicParams {
    fn default() -> Self {
        Self {
            train_days: 2.0,
            replan_every: 6,
            horizon_days: 7.0,
            forecast: ForecastConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub policy: PolicyKind,
    pub hw: HardwareModel,
    pub debt: DebtParams,
    pub pool_total_blocks: u64,
    /// Fraction of the pool holding live data at bin 0.
    pub initial_utilization: f64,
    /// Bucket ceiling of the dynamic policy, as a fraction of the pool.
    pub hard_limit: f64,
    pub fixed: FixedBucketPolicy,
    pub dynamic: DynamicParams,
    /// Leave the training prefix out of the reported totals.
    pub exclude_warmup: bool,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            policy: PolicyKind::Dynamic,
            hw: HardwareModel::default(),
            debt: DebtParams::default(),
            pool_total_blocks: 1 << 30,
            initial_utilization: 0.5,
            hard_limit: DEFAULT_HARD_LIMIT,
            fixed: FixedBucketPolicy::default(),
            dynamic: DynamicParams::default(),
            exclude_warmup: false,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn with_policy(&self, policy: PolicyKind) -> Self {
        Self {
            policy,
            ..self.clone()
        }
    }

    /// All checks are reported as configuration errors.
    pub fn validate(&self) -> Result<()> {
        let as_config = |e: Error| match e {
            Error::Parameter(m) => Error::Config(m),
            other => other,
        };
        self.hw.validate().map_err(as_config)?;
        self.fixed.validate().map_err(as_config)?;
        self.debt.snap.validate().map_err(as_config)?;
        check_dmd(self.debt.dmd_ratio).map_err(as_config)?;
        if self.debt.block_size == 0 {
            return Err(Error::Config("block_size must be positive".into()));
        }
        if !self.debt.cost_per_block.is_valid() {
            return Err(Error::Config(
                "cost_per_block values must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.initial_utilization) {
            return Err(Error::Config(
                "initial_utilization must lie in [0, 1]".into(),
            ));
        }
        if !(self.hard_limit > 0.0 && self.hard_limit <= 1.0) {
            return Err(Error::Config("hard_limit must lie in (0, 1]".into()));
        }
        if self.pool_total_blocks == 0 {
            return Err(Error::Config("pool_total_blocks must be positive".into()));
        }
        if self.dynamic.replan_every == 0
            || !(self.dynamic.horizon_days > 0.0)
            || !(self.dynamic.train_days > 0.0)
        {
            return Err(Error::Config(
                "dynamic replan cadence, horizon and training span must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn initial_pool(&self) -> Result<PoolState> {
        let used = (self.initial_utilization * self.pool_total_blocks as f64).round() as u64;
        PoolState::new(self.pool_total_blocks, used)
    }

    /// Bucket limit in blocks for the configured policy.
    pub fn bucket_limit(&self) -> u64 {
        match self.policy {
            PolicyKind::Fixed => self.fixed.bucket_limit(self.pool_total_blocks),
            PolicyKind::Dynamic => (self.hard_limit * self.pool_total_blocks as f64).floor() as u64,
        }
    }
}
