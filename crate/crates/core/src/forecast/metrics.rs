//! Forecast error metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_lengths(actual: &[f64], predicted: &[f64]) -> Result<()> {
    if actual.len() != predicted.len() {
        return Err(Error::Length(format!(
            "actual has {} values, prediction {}",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::Length("empty series".into()));
    }
    Ok(())
}

/// Symmetric mean absolute percentage error in percent. Terms with
/// `|A| + |F| = 0` contribute zero.
pub fn smape(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_lengths(actual, predicted)?;
    let sum: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, f)| {
            let denom = (a.abs() + f.abs()) / 2.0;
            if denom == 0.0 {
                0.0
            } else {
                (f - a).abs() / denom
            }
        })
        .sum();
    Ok(100.0 * sum / actual.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasSummary {
    /// Mean percentage error over bins with non-zero actuals; `None` when
    /// every actual is zero.
    pub mpe: Option<f64>,
    /// Bins excluded from the MPE because the actual was zero.
    pub excluded: usize,
    /// `Σ (A − F)` over all bins.
    pub cumulative_error: f64,
}

pub fn mpe_and_cumulative(actual: &[f64], predicted: &[f64]) -> Result<BiasSummary> {
    check_lengths(actual, predicted)?;
    let mut sum = 0.0;
    let mut included = 0usize;
    let mut cumulative = 0.0;
    for (a, f) in actual.iter().zip(predicted) {
        cumulative += a - f;
        if *a != 0.0 {
            sum += (a - f) / a;
            included += 1;
        }
    }
    Ok(BiasSummary {
        mpe: (included > 0).then(|| 100.0 * sum / included as f64),
        excluded: actual.len() - included,
        cumulative_error: cumulative,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastErrors {
    pub smape: f64,
    pub mpe: Option<f64>,
    pub mpe_excluded: usize,
    pub cumulative_error: f64,
    /// `A − F` per bin.
    pub per_bin_error: Vec<f64>,
}

impl ForecastErrors {
    pub fn evaluate(actual: &[f64], predicted: &[f64]) -> Result<Self> {
        let smape = smape(actual, predicted)?;
        let bias = mpe_and_cumulative(actual, predicted)?;
        Ok(Self {
            smape,
            mpe: bias.mpe,
            mpe_excluded: bias.excluded,
            cumulative_error: bias.cumulative_error,
            per_bin_error: actual.iter().zip(predicted).map(|(a, f)| a - f).collect(),
        })
    }

    pub fn max_abs_error(&self) -> f64 {
        self.per_bin_error.iter().fold(0.0, |m, e| m.max(e.abs()))
    }
}
