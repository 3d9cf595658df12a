//! Forecast-driven background scheduling for storage pools.
//!
//! The crate bins block IO traces into intensity series, forecasts them
//! with a per-day-cluster EWMA trend plus daily EWMA season, models the
//! capacity tied up by deferred background work, and replays traces under
//! a fixed-watermark or a forecast-driven scheduler.

// `!(x > 0.0)` is how parameter checks reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod debt;
pub mod error;
pub mod forecast;
pub mod sched;
pub mod sim;
pub mod trace;

pub use error::{Error, ErrorClass, Result};
