//! Forecasting every workload channel the scheduler consumes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::model::{ForecastConfig, ForecastModel};
use crate::error::{Error, Result};
use crate::trace::{BinStats, IntensitySeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    TotalIops,
    WriteBlocks,
    ReadRatio,
    UniqueFraction,
    UnmapLen,
}

impl Channel {
    pub const REQUIRED: [Channel; 4] = [
        Channel::TotalIops,
        Channel::WriteBlocks,
        Channel::ReadRatio,
        Channel::UniqueFraction,
    ];
    pub const ALL: [Channel; 5] = [
        Channel::TotalIops,
        Channel::WriteBlocks,
        Channel::ReadRatio,
        Channel::UniqueFraction,
        Channel::UnmapLen,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Channel::TotalIops => "total_iops",
            Channel::WriteBlocks => "write_blocks",
            Channel::ReadRatio => "read_ratio",
            Channel::UniqueFraction => "unique_fraction",
            Channel::UnmapLen => "unmap_len",
        }
    }

    pub fn is_ratio(self) -> bool {
        matches!(self, Channel::ReadRatio | Channel::UniqueFraction)
    }

    pub fn extract(self, b: &BinStats) -> f64 {
        match self {
            Channel::TotalIops => b.total_iops as f64,
            Channel::WriteBlocks => b.write_blocks as f64,
            Channel::ReadRatio => b.read_ratio,
            Channel::UniqueFraction => b.unique_write_fraction,
            Channel::UnmapLen => b.unmap_len as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelModels {
    pub models: BTreeMap<Channel, ForecastModel>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ChannelForecast {
    pub total_iops: Vec<f64>,
    pub write_blocks: Vec<f64>,
    pub read_ratio: Vec<f64>,
    pub unique_fraction: Vec<f64>,
    /// Zeros when no unmap model was fitted.
    pub unmap_len: Vec<f64>,
    /// Set when a ratio forecast fell outside `[0, 1]` and was clamped.
    pub ratio_clamped: bool,
}

impl ChannelForecast {
    pub fn len(&self) -> usize {
        self.total_iops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total_iops.is_empty()
    }

    pub fn channel(&self, c: Channel) -> &[f64] {
        match c {
            Channel::TotalIops => &self.total_iops,
            Channel::WriteBlocks => &self.write_blocks,
            Channel::ReadRatio => &self.read_ratio,
            Channel::UniqueFraction => &self.unique_fraction,
            Channel::UnmapLen => &self.unmap_len,
        }
    }
}

impl ChannelModels {
    /// Fits every channel in [`Channel::ALL`] on the series.
    pub fn fit(series: &IntensitySeries, cfg: &ForecastConfig) -> Result<Self> {
        let bpd = series.bins_per_day().ok_or_else(|| {
            Error::param(format!(
                "interval {} does not divide a day",
                series.interval
            ))
        })?;
        let models = Channel::ALL
            .iter()
            .map(|&c| {
                Ok((
                    c,
                    ForecastModel::fit(&series.channel(|b| c.extract(b)), bpd, cfg)?,
                ))
            })
            .collect::<Result<_>>()?;
        Ok(Self { models })
    }

    pub fn forecast_at(&self, start: usize, horizon: usize) -> Result<ChannelForecast> {
        let mut out = ChannelForecast::default();
        for c in Channel::REQUIRED {
            if !self.models.contains_key(&c) {
                return Err(Error::Config(format!(
                    "no forecast model for channel {}",
                    c.name()
                )));
            }
        }
        for c in Channel::ALL {
            let values = match self.models.get(&c) {
                Some(m) => m.forecast_at(start, horizon)?.values,
                None => vec![0.0; horizon],
            };
            let clamped: Vec<f64> = if c.is_ratio() {
                values
                    .iter()
                    .map(|&v| {
                        let r = v.clamp(0.0, 1.0);
                        if r != v {
                            out.ratio_clamped = true;
                        }
                        r
                    })
                    .collect()
            } else {
                values.iter().map(|v| v.max(0.0)).collect()
            };
            match c {
                Channel::TotalIops => out.total_iops = clamped,
                Channel::WriteBlocks => out.write_blocks = clamped,
                Channel::ReadRatio => out.read_ratio = clamped,
                Channel::UniqueFraction => out.unique_fraction = clamped,
                Channel::UnmapLen => out.unmap_len = clamped,
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecast::metrics::smape;
    use crate::trace::{synthesize_series, SyntheticProfile};

    #[test]
    fn constant_read_ratio_is_forecast_exactly() {
        let s = synthesize_series(&SyntheticProfile::flat(10.0, 3.0), 0).unwrap();
        let m = ChannelModels::fit(&s, &ForecastConfig::default()).unwrap();
        let f = m.forecast_at(s.len(), 144).unwrap();
        assert!(f.read_ratio.iter().all(|r| (r - 0.7).abs() < 1e-9));
        assert!(!f.ratio_clamped);
    }

    #[test]
    fn write_intensity_tracks_daily_shape() {
        let p = SyntheticProfile {
            noise: 0.1,
            ..SyntheticProfile::vdi(50.0, 6.0)
        };
        let s = synthesize_series(&p, 4).unwrap();
        let train = s.slice(0, 144 * 5);
        let m = ChannelModels::fit(&train, &ForecastConfig::default()).unwrap();
        let f = m.forecast_at(144 * 5, 144).unwrap();
        let actual = s.slice(144 * 5, 144 * 6).channel(|b| b.write_blocks as f64);
        // Relative noise of 10% gives roughly 8% per-bin SMAPE; allow 2.5×.
        assert!(smape(&actual, &f.write_blocks).unwrap() <= 25.0);
    }

    #[test]
    fn drifting_ratio_is_clamped_and_flagged() {
        let s = synthesize_series(&SyntheticProfile::flat(10.0, 2.0), 0).unwrap();
        let mut m = ChannelModels::fit(&s, &ForecastConfig::default()).unwrap();
        for st in &mut m.models.get_mut(&Channel::ReadRatio).unwrap().clusters {
            st.trend = 1.05;
        }
        let f = m.forecast_at(288, 10).unwrap();
        assert!(f.read_ratio.iter().all(|&r| r == 1.0));
        assert!(f.ratio_clamped);
    }

    #[test]
    fn missing_channel_is_config_error() {
        let s = synthesize_series(&SyntheticProfile::flat(10.0, 2.0), 0).unwrap();
        let mut m = ChannelModels::fit(&s, &ForecastConfig::default()).unwrap();
        m.models.remove(&Channel::UniqueFraction);
        assert!(matches!(m.forecast_at(0, 5), Err(Error::Config(_))));
        m = ChannelModels::fit(&s, &ForecastConfig::default()).unwrap();
        m.models.remove(&Channel::UnmapLen);
        assert!(m
            .forecast_at(0, 5)
            .unwrap()
            .unmap_len
            .iter()
            .all(|&v| v == 0.0));
    }
}
