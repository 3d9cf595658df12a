//! Workload forecasting: decomposition, day clustering, the EWMA
//! trend-plus-season forecaster, a Holt-Winters baseline and error metrics.

mod backtest;
mod channels;
mod cluster;
mod decompose;
mod ewma;
mod holt_winters;
mod metrics;
mod model;

pub use backtest::{backtest, Backtest, ForecastMethod, Split};
pub use channels::{Channel, ChannelForecast, ChannelModels};
pub use cluster::{cluster_days, kmeans, max_clusters, DayCluster, KMeansFit};
pub use decompose::{decompose_additive, Decomposition};
pub use ewma::{ewma_fold, ewma_update};
pub use holt_winters::{HoltWinters, HwParams, DAMPING_GRID, SMOOTHING_GRID};
pub use metrics::{mpe_and_cumulative, smape, BiasSummary, ForecastErrors};
pub use model::{Calendar, ClusterState, Forecast, ForecastConfig, ForecastModel, HOLIDAY_LABEL};
