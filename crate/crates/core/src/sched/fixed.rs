//! Fixed-watermark bucket policy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below `low` tied fraction BG uses only idle cores; between `low` and
/// `high` it claims a share of all cores ramping linearly to N; at `high`
/// it takes every core until the fraction falls to `high − hysteresis`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FixedBucketPolicy {
    pub low: f64,
    pub high: f64,
    pub hysteresis: f64,
    #[serde(skip)]
    latched: bool,
}

impl Default for FixedBucketPolicy {
    fn default() -> Self {
        Self {
            low: 0.40,
            high: 0.50,
            hysteresis: 0.02,
            latched: false,
        }
    }
}

impl FixedBucketPolicy {
    pub fn new(low: f64, high: f64, hysteresis: f64) -> Result<Self> {
        let p = Self {
            low,
            high,
            hysteresis,
            latched: false,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.low && self.low < self.high && self.high < 1.0) || !(self.hysteresis >= 0.0)
        {
            return Err(Error::param(
                "watermarks need 0 < low < high < 1 and hysteresis >= 0",
            ));
        }
        Ok(())
    }

    pub fn bucket_limit(&self, total_blocks: u64) -> u64 {
        (self.high * total_blocks as f64).floor() as u64
    }

    pub fn is_latched(&self) -> bool {
        self.latched
    }

    /// Mandatory BG cores for the current tied fraction.
    pub fn mandatory_cores(&mut self, tied_fraction: f64, n_cores: u32) -> u32 {
        if self.latched {
            if tied_fraction > self.high - self.hysteresis {
                return n_cores;
            }
            self.latched = false;
        }
        if tied_fraction >= self.high {
            self.latched = true;
            return n_cores;
        }
        if tied_fraction < self.low {
            return 0;
        }
        let share = (tied_fraction - self.low) / (self.high - self.low);
        ((n_cores as f64 * share + 0.5).floor() as u32).min(n_cores)
    }
}
