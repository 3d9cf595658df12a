//! Train/test evaluation of a forecaster on one series.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::holt_winters::{HoltWinters, HwParams};
use super::metrics::ForecastErrors;
use super::model::{ForecastConfig, ForecastModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecastMethod {
    Ewma,
    HoltWinters,
}

/// Bin ranges of a backtest: train on `0..train_bins`, score on
/// `test_start..test_start + test_bins`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train_bins: usize,
    pub test_start: usize,
    pub test_bins: usize,
}

impl Split {
    /// Builds a split from day counts. The test span defaults to starting
    /// right after training; training needs at least two days and must
    /// not overlap the test span.
    pub fn from_days(
        bins_per_day: usize,
        train_days: f64,
        test_start_day: Option<f64>,
        test_days: f64,
    ) -> Result<Self> {
        let bins = |days: f64| (days * bins_per_day as f64).round() as usize;
        if !(train_days >= 2.0) {
            return Err(Error::InsufficientHistory {
                needed: "2 training days".into(),
                available: format!("{train_days} requested"),
            });
        }
        if !(test_days > 0.0) {
            return Err(Error::param("test span must be positive"));
        }
        let train_bins = bins(train_days);
        let test_start = test_start_day.map_or(train_bins, bins);
        if test_start < train_bins {
            return Err(Error::param(format!(
                "test span starting at day {} overlaps the {train_days}-day training span",
                test_start_day.unwrap_or_default()
            )));
        }
        Ok(Self {
            train_bins,
            test_start,
            test_bins: bins(test_days).max(1),
        })
    }

    pub fn test_end(&self) -> usize {
        self.test_start + self.test_bins
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Backtest {
    pub method: ForecastMethod,
    pub split: Split,
    pub actual: Vec<f64>,
    pub predicted: Vec<f64>,
    pub errors: ForecastErrors,
    /// Day labels absent from training (EWMA only).
    pub unknown_labels: BTreeSet<String>,
    /// Selected smoothing parameters (Holt-Winters only).
    pub hw_params: Option<HwParams>,
}

/// Fits `method` on the training span of `values` and scores it on the
/// test span. Holt-Winters uses the grid-searched parameters, with a
/// damped trend when `damped` is set.
pub fn backtest(
    values: &[f64],
    bins_per_day: usize,
    split: Split,
    method: ForecastMethod,
    cfg: &ForecastConfig,
    damped: bool,
) -> Result<Backtest> {
    if split.test_end() > values.len() {
        return Err(Error::InsufficientHistory {
            needed: format!("{} bins for the test span", split.test_end()),
            available: format!("{} bins", values.len()),
        });
    }
    let train = &values[..split.train_bins];
    let actual = values[split.test_start..split.test_end()].to_vec();
    let (predicted, unknown_labels, hw_params) = match method {
        ForecastMethod::Ewma => {
            let model = ForecastModel::fit(train, bins_per_day, cfg)?;
            let f = model.forecast_at(split.test_start, split.test_bins)?;
            (f.values, f.unknown_labels, None)
        }
        ForecastMethod::HoltWinters => {
            let hw = HoltWinters::fit_auto(train, cfg.period.unwrap_or(bins_per_day), damped)?;
            let gap = split.test_start - split.train_bins;
            let f = hw.forecast(gap + split.test_bins).split_off(gap);
            (f, BTreeSet::new(), Some(hw.params))
        }
    };
    let errors = ForecastErrors::evaluate(&actual, &predicted)?;
    Ok(Backtest {
        method,
        split,
        actual,
        predicted,
        errors,
        unknown_labels,
        hw_params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn periodic(days: usize) -> Vec<f64> {
        (0..days * 24).map(|t| 10.0 + (t % 24) as f64).collect()
    }

    #[test]
    fn split_rules() {
        let s = Split::from_days(144, 5.0, None, 1.0).unwrap();
        assert_eq!((s.train_bins, s.test_start, s.test_bins), (720, 720, 144));
        assert!(matches!(
            Split::from_days(144, 1.5, None, 1.0),
            Err(Error::InsufficientHistory { .. })
        ));
        assert!(matches!(
            Split::from_days(144, 5.0, Some(4.0), 1.0),
            Err(Error::Parameter(_))
        ));
        assert_eq!(
            Split::from_days(144, 3.0, Some(4.0), 1.0)
                .unwrap()
                .test_start,
            576
        );
    }

    #[test]
    fn both_methods_reproduce_a_repeating_day() {
        let v = periodic(7);
        let split = Split::from_days(24, 5.0, Some(6.0), 1.0).unwrap();
        let e = backtest(
            &v,
            24,
            split,
            ForecastMethod::Ewma,
            &ForecastConfig::default(),
            true,
        )
        .unwrap();
        assert!(e.errors.smape < 1e-9);
        assert_eq!(e.actual.len(), 24);
        let h = backtest(
            &v,
            24,
            split,
            ForecastMethod::HoltWinters,
            &ForecastConfig::default(),
            false,
        )
        .unwrap();
        assert!(h.hw_params.is_some());
        assert!(h.errors.smape < 1.0, "smape {}", h.errors.smape);
    }

    #[test]
    fn short_series_is_rejected() {
        let v = periodic(5);
        let split = Split::from_days(24, 5.0, None, 1.0).unwrap();
        assert!(backtest(
            &v,
            24,
            split,
            ForecastMethod::Ewma,
            &ForecastConfig::default(),
            true
        )
        .is_err());
    }
}
