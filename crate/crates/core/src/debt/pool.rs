use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_HARD_LIMIT: f64 = 0.95;

/// Capacity ledger: live data plus blocks tied up by deferred debt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolState {
    pub total_blocks: u64,
    pub used_blocks: u64,
    pub debt_tied_blocks: u64,
}

/// Block movements of one interval.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntervalDelta {
    /// New live blocks.
    pub used_added: u64,
    /// Live blocks released (unmapped data, expired snapshot holds).
    pub used_released: u64,
    /// Tied blocks of newly generated debt.
    pub tied_added: u64,
    /// Tied blocks released by processed debt.
    pub tied_released: u64,
}

impl PoolState {
    pub fn new(total_blocks: u64, used_blocks: u64) -> Result<Self> {
        if total_blocks == 0 || used_blocks > total_blocks {
            return Err(Error::param("pool needs 0 <= used <= total and total > 0"));
        }
        Ok(Self {
            total_blocks,
            used_blocks,
            debt_tied_blocks: 0,
        })
    }

    pub fn occupied(&self) -> u64 {
        self.used_blocks + self.debt_tied_blocks
    }

    pub fn free_blocks(&self) -> u64 {
        self.total_blocks - self.occupied()
    }

    pub fn tied_fraction(&self) -> f64 {
        self.debt_tied_blocks as f64 / self.total_blocks as f64
    }

    pub fn occupied_fraction(&self) -> f64 {
        self.occupied() as f64 / self.total_blocks as f64
    }

    /// Applies releases first, then additions. Additions that would push
    /// occupancy past `total_blocks` are refused (tied debt takes
    /// precedence over new data) and the refused block count is returned.
    pub fn apply_interval(&mut self, d: IntervalDelta, bin: usize) -> Result<u64> {
        self.used_blocks =
            self.used_blocks
                .checked_sub(d.used_released)
                .ok_or(Error::Invariant {
                    bin,
                    message: "released more live blocks than in use".into(),
                })?;
        self.debt_tied_blocks =
            self.debt_tied_blocks
                .checked_sub(d.tied_released)
                .ok_or(Error::Invariant {
                    bin,
                    message: "released more tied blocks than tied".into(),
                })?;
        let free = self.free_blocks();
        let tied = d.tied_added.min(free);
        let used = d.used_added.min(free - tied);
        self.debt_tied_blocks += tied;
        self.used_blocks += used;
        Ok(d.tied_added + d.used_added - tied - used)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::debt::generate::unique_blocks;

    #[test]
    fn unique_writes_grow_usage() {
        let mut p = PoolState::new(10_000, 1000).unwrap();
        let delta = IntervalDelta {
            used_added: unique_blocks(100, 0.6),
            ..IntervalDelta::default()
        };
        assert_eq!(p.apply_interval(delta, 0).unwrap(), 0);
        assert_eq!(p.used_blocks, 1060);
    }

    #[test]
    fn processing_overwrite_releases_tied() {
        let mut p = PoolState::new(10_000, 1000).unwrap();
        p.apply_interval(
            IntervalDelta {
                tied_added: 400,
                ..IntervalDelta::default()
            },
            0,
        )
        .unwrap();
        p.apply_interval(
            IntervalDelta {
                tied_released: 400,
                ..IntervalDelta::default()
            },
            1,
        )
        .unwrap();
        assert_eq!((p.used_blocks, p.debt_tied_blocks), (1000, 0));
    }

    #[test]
    fn overflow_is_blocked_not_applied() {
        let mut p = PoolState::new(1000, 900).unwrap();
        let blocked = p
            .apply_interval(
                IntervalDelta {
                    used_added: 250,
                    ..IntervalDelta::default()
                },
                0,
            )
            .unwrap();
        assert_eq!(blocked, 150);
        assert_eq!(p.occupied(), 1000);
    }

    #[test]
    fn over_release_is_an_invariant_breach() {
        let mut p = PoolState::new(1000, 10).unwrap();
        let err = p
            .apply_interval(
                IntervalDelta {
                    tied_released: 1,
                    ..IntervalDelta::default()
                },
                7,
            )
            .unwrap_err();
        assert!(matches!(err, Error::Invariant { bin: 7, .. }));
    }
}
