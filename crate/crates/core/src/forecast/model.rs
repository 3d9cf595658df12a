//! Per-day-cluster EWMA trend plus EWMA daily season.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use super::cluster::{cluster_days, DayCluster};
use super::ewma::check_alpha;
use crate::error::{Error, Result};

pub const HOLIDAY_LABEL: &str = "holiday";

/// Maps day indices (day 0 = first day of the series) to labels.
///
/// Labels are lowercase three-letter weekday names; any date in
/// `holidays` is labelled [`HOLIDAY_LABEL`] instead.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Calendar {
    pub start_date: NaiveDate,
    pub holidays: BTreeSet<NaiveDate>,
}

impl Default for Calendar {
    fn default() -> Self {
        Self {
            start_date: NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(),
            holidays: BTreeSet::new(),
        }
    }
}

fn weekday_label(w: Weekday) -> &'static str {
    match w {
        Weekday::Mon => "mon",
        Weekday::Tue => "tue",
        Weekday::Wed => "wed",
        Weekday::Thu => "thu",
        Weekday::Fri => "fri",
        Weekday::Sat => "sat",
        Weekday::Sun => "sun",
    }
}

impl Calendar {
    pub fn starting(start_date: NaiveDate) -> Self {
        Self {
            start_date,
            holidays: BTreeSet::new(),
        }
    }

    pub fn date(&self, day: usize) -> NaiveDate {
        self.start_date + Duration::days(day as i64)
    }

    pub fn label(&self, day: usize) -> String {
        let date = self.date(day);
        if self.holidays.contains(&date) {
            HOLIDAY_LABEL.to_string()
        } else {
            weekday_label(date.weekday()).to_string()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForecastConfig {
    /// Season length in bins; must divide the bins per day. `None` uses
    /// one full day.
    pub period: Option<usize>,
    pub alpha_trend: f64,
    pub alpha_season: f64,
    /// Only the most recent weeks of history are used; 0 keeps all.
    pub history_weeks: usize,
    pub seed: u64,
    pub calendar: Calendar,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        Self {
            period: None,
            alpha_trend: 0.3,
            alpha_season: 0.3,
            history_weeks: 0,
            seed: 0,
            calendar: Calendar::default(),
        }
    }
}

/// Smoothed state of one day cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterState {
    pub cluster: DayCluster,
    pub trend: f64,
    pub season: Vec<f64>,
    /// Number of periods folded into the state.
    pub updates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastModel {
    pub period: usize,
    pub bins_per_day: usize,
    pub alpha_trend: f64,
    pub alpha_season: f64,
    pub history_weeks: usize,
    pub calendar: Calendar,
    pub clusters: Vec<ClusterState>,
    /// Cluster used for labels never seen in history: the one whose
    /// centroid is nearest the mean profile of all labels.
    pub fallback: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub values: Vec<f64>,
    /// Day labels that were absent from history and used the fallback
    /// cluster.
    pub unknown_labels: BTreeSet<String>,
}

const HOURS: usize = 24;

/// Mean intensity per hour of one day.
fn hourly_profile(day: &[f64]) -> Vec<f64> {
    let mut sums = [0.0; HOURS];
    let mut counts = [0usize; HOURS];
    for (i, y) in day.iter().enumerate() {
        let h = i * HOURS / day.len();
        sums[h] += y;
        counts[h] += 1;
    }
    sums.iter()
        .zip(counts)
        .map(|(s, c)| if c == 0 { 0.0 } else { s / c as f64 })
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

impl ForecastModel {
    /// Fits one channel. `values[0]` is the first bin of calendar day 0;
    /// only whole days are used.
    pub fn fit(values: &[f64], bins_per_day: usize, cfg: &ForecastConfig) -> Result<Self> {
        check_alpha(cfg.alpha_trend)?;
        check_alpha(cfg.alpha_season)?;
        if bins_per_day == 0 {
            return Err(Error::param("bins per day must be positive"));
        }
        let period = cfg.period.unwrap_or(bins_per_day);
        if period == 0 || !bins_per_day.is_multiple_of(period) {
            return Err(Error::param(format!(
                "period {period} does not divide {bins_per_day} bins per day"
            )));
        }
        let full_days = values.len() / bins_per_day;
        if full_days < 2 {
            return Err(Error::InsufficientHistory {
                needed: "2 days".into(),
                available: format!("{:.2} days", values.len() as f64 / bins_per_day as f64),
            });
        }
        let first_day = if cfg.history_weeks > 0 {
            full_days.saturating_sub(cfg.history_weeks * 7)
        } else {
            0
        };
        let days: Vec<(usize, &[f64])> = (first_day..full_days)
            .map(|d| (d, &values[d * bins_per_day..(d + 1) * bins_per_day]))
            .collect();

        let mut by_label: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
        for (d, day) in &days {
            by_label
                .entry(cfg.calendar.label(*d))
                .or_default()
                .push(hourly_profile(day));
        }
        let profiles: BTreeMap<String, Vec<f64>> = by_label
            .iter()
            .map(|(label, ps)| {
                let avg =
                    (0..HOURS).map(|h| ps.iter().map(|p| p[h]).sum::<f64>() / ps.len() as f64);
                (label.clone(), avg.collect())
            })
            .collect();
        let clusters = cluster_days(&profiles, profiles.len(), cfg.seed)?;

        let grand: Vec<f64> = (0..HOURS)
            .map(|h| profiles.values().map(|p| p[h]).sum::<f64>() / profiles.len() as f64)
            .collect();
        let fallback = clusters
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let d: f64 = c
                    .centroid
                    .iter()
                    .zip(&grand)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (i, d)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);

        let mut states: Vec<ClusterState> = clusters
            .into_iter()
            .map(|cluster| ClusterState {
                cluster,
                trend: 0.0,
                season: vec![0.0; period],
                updates: 0,
            })
            .collect();
        let (at, asn) = (cfg.alpha_trend, cfg.alpha_season);
        for (d, day) in &days {
            let label = cfg.calendar.label(*d);
            let state = states
                .iter_mut()
                .find(|s| s.cluster.members.contains(&label))
                .expect("every history label is clustered");
            for cycle in day.chunks(period) {
                let level = mean(cycle);
                if state.updates == 0 {
                    state.trend = level;
                    for (s, y) in state.season.iter_mut().zip(cycle) {
                        *s = y - level;
                    }
                } else {
                    state.trend = at * level + (1.0 - at) * state.trend;
                    for (s, y) in state.season.iter_mut().zip(cycle) {
                        *s = asn * (y - level) + (1.0 - asn) * *s;
                    }
                }
                state.updates += 1;
            }
        }

        Ok(Self {
            period,
            bins_per_day,
            alpha_trend: at,
            alpha_season: asn,
            history_weeks: cfg.history_weeks,
            calendar: cfg.calendar.clone(),
            clusters: states,
            fallback,
        })
    }

    fn state_for(&self, label: &str) -> Option<&ClusterState> {
        self.clusters
            .iter()
            .find(|s| s.cluster.members.contains(label))
    }

    /// Forecast for bins `start..start + horizon`, where bin indices count
    /// from the first bin of calendar day 0.
    pub fn forecast_at(&self, start: usize, horizon: usize) -> Result<Forecast> {
        if horizon == 0 {
            return Err(Error::param("forecast horizon must be positive"));
        }
        let mut unknown = BTreeSet::new();
        let values = (start..start + horizon)
            .map(|t| {
                let label = self.calendar.label(t / self.bins_per_day);
                let state = self.state_for(&label).unwrap_or_else(|| {
                    unknown.insert(label.clone());
                    &self.clusters[self.fallback]
                });
                state.trend + state.season[t % self.period]
            })
            .collect();
        Ok(Forecast {
            values,
            unknown_labels: unknown,
        })
    }

    /// Forecast over explicit day labels, one label per day starting at a
    /// day boundary.
    pub fn forecast_labels(&self, labels: &[String], horizon: usize) -> Result<Forecast> {
        if horizon == 0 {
            return Err(Error::param("forecast horizon must be positive"));
        }
        if labels.len() * self.bins_per_day < horizon {
            return Err(Error::param("calendar shorter than forecast horizon"));
        }
        let mut unknown = BTreeSet::new();
        let values = (0..horizon)
            .map(|t| {
                let label = &labels[t / self.bins_per_day];
                let state = self.state_for(label).unwrap_or_else(|| {
                    unknown.insert(label.clone());
                    &self.clusters[self.fallback]
                });
                state.trend + state.season[t % self.period]
            })
            .collect();
        Ok(Forecast {
            values,
            unknown_labels: unknown,
        })
    }
}
