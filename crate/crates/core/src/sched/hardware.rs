use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HardwareModel {
    pub n_cores: u32,
    /// Foreground ops per second per core.
    pub fg_core_iops: f64,
    /// Background ops per second per core.
    pub bg_core_rate: f64,
    /// Bin width in seconds.
    pub interval: f64,
}

impl Default for HardwareModel {
    fn default() -> Self {
        Self {
            n_cores: 64,
            fg_core_iops: 50.0,
            bg_core_rate: 20.0,
            interval: 600.0,
        }
    }
}

impl HardwareModel {
    pub fn validate(&self) -> Result<()> {
        if self.n_cores == 0
            || !(self.fg_core_iops > 0.0)
            || !(self.bg_core_rate > 0.0)
            || !(self.interval > 0.0)
        {
            return Err(Error::param("hardware parameters must be positive"));
        }
        Ok(())
    }

    /// Foreground ops one core serves in one bin.
    pub fn fg_ops_per_core(&self) -> u64 {
        (self.fg_core_iops * self.interval).round() as u64
    }

    /// Background ops one core processes in one bin.
    pub fn bg_ops_per_core(&self) -> u64 {
        (self.bg_core_rate * self.interval).round() as u64
    }

    /// Cores needed to serve `ops` foreground ops within one bin.
    pub fn cores_for_ops(&self, ops: f64) -> u32 {
        let x = ops / self.fg_ops_per_core() as f64;
        ((x - x * 1e-12).ceil().max(0.0) as u64).min(u32::MAX as u64) as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoreAllocation {
    pub bin: usize,
    pub c_fg: u32,
    pub c_bg: u32,
    pub cff: u32,
}

/// `c_fg = clamp(ceil(iops / CIOPS_FG) − cff, 0, N)`, `c_bg = N − c_fg`.
pub fn allocate_cores(iops: f64, hw: &HardwareModel, cff: u32, bin: usize) -> CoreAllocation {
    let x = iops.max(0.0) / hw.fg_core_iops;
    let need = (x - x * 1e-12).ceil().min(f64::from(u32::MAX)) as u32;
    let c_fg = need.saturating_sub(cff).min(hw.n_cores);
    CoreAllocation {
        bin,
        c_fg,
        c_bg: hw.n_cores - c_fg,
        cff,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn allocation_examples() {
        let hw = HardwareModel::default();
        let a = allocate_cores(1600.0, &hw, 0, 0);
        assert_eq!((a.c_fg, a.c_bg), (32, 32));
        let a = allocate_cores(5000.0, &hw, 0, 0);
        assert_eq!((a.c_fg, a.c_bg), (64, 0));
        let a = allocate_cores(1600.0, &hw, 10, 0);
        assert_eq!((a.c_fg, a.c_bg), (22, 42));
        let a = allocate_cores(10.0, &hw, 5, 0);
        assert_eq!((a.c_fg, a.c_bg), (0, 64));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn cores_partition(iops in 0.0f64..1e5, cff in 0u32..200, n in 1u32..256) {
            let hw = HardwareModel { n_cores: n, ..HardwareModel::default() };
            let a = allocate_cores(iops, &hw, cff, 0);
            prop_assert_eq!(a.c_fg + a.c_bg, n);
            prop_assert!(a.c_fg <= n);
        }
    }

    proptest! {
        #[test]
        fn monotone_in_cff_and_load(iops in 0.0f64..5000.0, d in 0.0f64..500.0, cff in 0u32..64) {
            let hw = HardwareModel::default();
            let base = allocate_cores(iops, &hw, cff, 0).c_fg;
            prop_assert!(allocate_cores(iops, &hw, cff + 1, 0).c_fg <= base);
            prop_assert!(allocate_cores(iops + d, &hw, cff, 0).c_fg >= base);
        }
    }
}
