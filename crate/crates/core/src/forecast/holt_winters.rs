//! Additive Holt-Winters (triple exponential smoothing) baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HwParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Trend damping; 1.0 means undamped.
    pub phi: f64,
}

/// Smoothing values searched for α, β and γ.
pub const SMOOTHING_GRID: [f64; 11] = [0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
pub const DAMPING_GRID: [f64; 3] = [0.8, 0.9, 0.98];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoltWinters {
    pub params: HwParams,
    pub period: usize,
    pub level: f64,
    pub trend: f64,
    pub season: Vec<f64>,
    /// Length of the fitted series; forecasts continue from here.
    pub fitted_len: usize,
    /// In-sample sum of squared one-step errors.
    pub sse: f64,
}

fn check_input(series: &[f64], period: usize) -> Result<()> {
    if period < 2 {
        return Err(Error::param("seasonal period must be at least 2"));
    }
    if series.len() < 2 * period {
        return Err(Error::Length(format!(
            "Holt-Winters needs at least {} values, got {}",
            2 * period,
            series.len()
        )));
    }
    Ok(())
}

fn run(series: &[f64], period: usize, p: HwParams) -> HoltWinters {
    let first = &series[..period];
    let second = &series[period..2 * period];
    let m1 = first.iter().sum::<f64>() / period as f64;
    let m2 = second.iter().sum::<f64>() / period as f64;
    // Initial state sits one step before the first observation, with the
    // first period detrended along the initial slope.
    let mut trend = (m2 - m1) / period as f64;
    let centre = (period as f64 - 1.0) / 2.0;
    let mut level = m1 - trend * (centre + 1.0);
    let mut season: Vec<f64> = first
        .iter()
        .enumerate()
        .map(|(i, y)| y - (m1 + (i as f64 - centre) * trend))
        .collect();
    let mut sse = 0.0;
    for (t, &y) in series.iter().enumerate() {
        let i = t % period;
        let pred = level + p.phi * trend + season[i];
        sse += (y - pred) * (y - pred);
        let prev_level = level;
        level = p.alpha * (y - season[i]) + (1.0 - p.alpha) * (prev_level + p.phi * trend);
        trend = p.beta * (level - prev_level) + (1.0 - p.beta) * p.phi * trend;
        season[i] = p.gamma * (y - level) + (1.0 - p.gamma) * season[i];
    }
    HoltWinters {
        params: p,
        period,
        level,
        trend,
        season,
        fitted_len: series.len(),
        sse,
    }
}

impl HoltWinters {
    /// Fits with fixed parameters.
    pub fn fit(series: &[f64], period: usize, params: HwParams) -> Result<Self> {
        check_input(series, period)?;
        for v in [params.alpha, params.beta, params.gamma, params.phi] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(format!(
                    "Holt-Winters parameter {v} outside [0, 1]"
                )));
            }
        }
        Ok(run(series, period, params))
    }

    /// Grid search minimising in-sample SSE. Without damping φ is fixed at 1.
    pub fn fit_auto(series: &[f64], period: usize, damped: bool) -> Result<Self> {
        check_input(series, period)?;
        let phis: &[f64] = if damped { &DAMPING_GRID } else { &[1.0] };
        let mut best: Option<HoltWinters> = None;
        for &phi in phis {
            for &alpha in &SMOOTHING_GRID {
                for &beta in &SMOOTHING_GRID {
                    for &gamma in &SMOOTHING_GRID {
                        let fit = run(
                            series,
                            period,
                            HwParams {
                                alpha,
                                beta,
                                gamma,
                                phi,
                            },
                        );
                        if best.as_ref().is_none_or(|b| fit.sse < b.sse) {
                            best = Some(fit);
                        }
                    }
                }
            }
        }
        Ok(best.expect("non-empty grid"))
    }

    /// Forecasts the `horizon` bins following the fitted series.
    pub fn forecast(&self, horizon: usize) -> Vec<f64> {
        let phi = self.params.phi;
        let mut damp = 0.0;
        let mut phi_pow = 1.0;
        (1..=horizon)
            .map(|h| {
                phi_pow *= phi;
                damp += phi_pow;
                self.level
                    + damp * self.trend
                    + self.season[(self.fitted_len + h - 1) % self.period]
            })
            .collect()
    }
}
