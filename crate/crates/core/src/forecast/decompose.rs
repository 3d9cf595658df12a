//! Classical additive decomposition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `Y[t] = trend[t] + season[t mod period] + residual[t]`.
///
/// The centred moving average leaves the trend undefined for the first
/// and last half period; those entries are padded with the nearest
/// defined value and `trend_start..trend_end` marks the defined range.
/// Residuals are computed against the padded trend, so the identity holds
/// at every index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub period: usize,
    pub trend: Vec<f64>,
    pub season: Vec<f64>,
    pub residual: Vec<f64>,
    pub trend_start: usize,
    pub trend_end: usize,
}

impl Decomposition {
    pub fn trend_defined(&self, t: usize) -> bool {
        (self.trend_start..self.trend_end).contains(&t)
    }
}

/// Centred moving average of width `period`. Even periods use the 2×P
/// convention: `P + 1` taps with half weight on both ends.
fn centred_moving_average(series: &[f64], period: usize) -> (Vec<Option<f64>>, usize) {
    let n = series.len();
    let half = period / 2;
    let mut out = vec![None; n];
    for (t, slot) in out
        .iter_mut()
        .enumerate()
        .take(n.saturating_sub(half))
        .skip(half)
    {
        let value = if period.is_multiple_of(2) {
            let inner: f64 = series[t + 1 - half..t + half].iter().sum();
            (inner + 0.5 * (series[t - half] + series[t + half])) / period as f64
        } else {
            series[t - half..=t + half].iter().sum::<f64>() / period as f64
        };
        *slot = Some(value);
    }
    (out, half)
}

pub fn decompose_additive(series: &[f64], period: usize) -> Result<Decomposition> {
    if period < 2 {
        return Err(Error::param("decomposition period must be at least 2"));
    }
    if series.len() < 2 * period {
        return Err(Error::Length(format!(
            "decomposition needs at least {} values, got {}",
            2 * period,
            series.len()
        )));
    }
    let n = series.len();
    let (ma, half) = centred_moving_average(series, period);
    let trend_start = half;
    let trend_end = n - half;

    let mut sums = vec![0.0; period];
    let mut counts = vec![0usize; period];
    for t in trend_start..trend_end {
        let detrended = series[t] - ma[t].expect("defined inside range");
        sums[t % period] += detrended;
        counts[t % period] += 1;
    }
    let mut season: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
        .collect();
    let mean = season.iter().sum::<f64>() / period as f64;
    season.iter_mut().for_each(|s| *s -= mean);

    let first = ma[trend_start].expect("defined");
    let last = ma[trend_end - 1].expect("defined");
    let trend: Vec<f64> = (0..n)
        .map(|t| ma[t].unwrap_or(if t < trend_start { first } else { last }))
        .collect();
    let residual = (0..n)
        .map(|t| series[t] - trend[t] - season[t % period])
        .collect();
    Ok(Decomposition {
        period,
        trend,
        season,
        residual,
        trend_start,
        trend_end,
    })
}
