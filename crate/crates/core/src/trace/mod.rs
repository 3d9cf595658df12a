//! Trace ingestion, binning and characterization.

mod correlation;
mod record;
mod series;
mod synth;

pub use correlation::{autocorrelation, partial_autocorrelation, Correlogram};
pub use record::{
    open_trace_file, parse_trace, read_trace_file, write_trace, Op, ParseOptions, ParsedTrace,
    TraceFormat, TraceRecord,
};
pub use series::{
    bin_series, bins_per_day, BinConfig, BinStats, IntensitySeries, DEFAULT_BLOCK_SIZE,
    DEFAULT_DEDUP_WINDOW, DEFAULT_INTERVAL_SECS,
};
pub use synth::{synthesize_series, synthesize_trace, DailyShape, SyntheticProfile};
