//! Fixed-interval intensity series built from trace records.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::record::{Op, TraceRecord};
use crate::error::{Error, Result};

pub const DEFAULT_INTERVAL_SECS: f64 = 600.0;
pub const DEFAULT_BLOCK_SIZE: u64 = 4096;
pub const DEFAULT_DEDUP_WINDOW: usize = 6;

/// Per-interval counters. Counts are operations per interval, lengths are
/// bytes per interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinStats {
    pub total_iops: u64,
    pub read_iops: u64,
    pub write_iops: u64,
    pub unmap_ops: u64,
    pub unmap_len: u64,
    pub write_blocks: u64,
    pub unique_write_fraction: f64,
    pub read_ratio: f64,
}

impl Default for BinStats {
    fn default() -> Self {
        Self {
            total_iops: 0,
            read_iops: 0,
            write_iops: 0,
            unmap_ops: 0,
            unmap_len: 0,
            write_blocks: 0,
            unique_write_fraction: 1.0,
            read_ratio: 0.0,
        }
    }
}

impl BinStats {
    /// Foreground read+write operations in the bin.
    pub fn fg_ops(&self) -> u64 {
        self.read_iops + self.write_iops
    }

    pub fn refresh_read_ratio(&mut self) {
        self.read_ratio = self.read_iops as f64 / (self.read_iops + self.write_iops).max(1) as f64;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensitySeries {
    /// Bin width in seconds.
    pub interval: f64,
    /// Start of bin 0 in trace seconds.
    pub start_epoch: f64,
    pub bins: Vec<BinStats>,
}

impl IntensitySeries {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Bins per 24 hours, when the interval divides a day evenly.
    pub fn bins_per_day(&self) -> Option<usize> {
        bins_per_day(self.interval)
    }

    pub fn total_iops(&self) -> Vec<f64> {
        self.channel(|b| b.total_iops as f64)
    }

    pub fn channel(&self, f: impl Fn(&BinStats) -> f64) -> Vec<f64> {
        self.bins.iter().map(f).collect()
    }

    /// Sub-series of bins `[from, to)` with a shifted epoch.
    pub fn slice(&self, from: usize, to: usize) -> IntensitySeries {
        let to = to.min(self.bins.len());
        let from = from.min(to);
        IntensitySeries {
            interval: self.interval,
            start_epoch: self.start_epoch + from as f64 * self.interval,
            bins: self.bins[from..to].to_vec(),
        }
    }

    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(SERIES_HEADER)?;
        for (idx, b) in self.bins.iter().enumerate() {
            w.write_record([
                idx.to_string(),
                format!("{:?}", self.start_epoch + idx as f64 * self.interval),
                b.total_iops.to_string(),
                b.read_iops.to_string(),
                b.write_iops.to_string(),
                b.unmap_ops.to_string(),
                b.unmap_len.to_string(),
                b.write_blocks.to_string(),
                format!("{:?}", b.unique_write_fraction),
                format!("{:?}", b.read_ratio),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a series previously written by [`IntensitySeries::write_csv`].
    /// The interval is taken from the `start_s` column, or `interval` when
    /// there is fewer than two rows.
    pub fn read_csv<R: Read>(source: R, interval: f64) -> Result<IntensitySeries> {
        let mut r = csv::Reader::from_reader(source);
        let mut rows: Vec<SeriesRow> = Vec::new();
        for row in r.deserialize::<SeriesRow>() {
            rows.push(row?);
        }
        let start_epoch = rows.first().map_or(0.0, |r| r.start_s);
        let interval = if rows.len() >= 2 {
            rows[1].start_s - rows[0].start_s
        } else {
            interval
        };
        if interval <= 0.0 {
            return Err(Error::Format {
                line: 2,
                message: "non-increasing bin start times".into(),
            });
        }
        Ok(IntensitySeries {
            interval,
            start_epoch,
            bins: rows.into_iter().map(SeriesRow::into_stats).collect(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

const SERIES_HEADER: [&str; 10] = [
    "bin",
    "start_s",
    "total_iops",
    "read_iops",
    "write_iops",
    "unmap_ops",
    "unmap_len",
    "write_blocks",
    "unique_write_fraction",
    "read_ratio",
];

#[derive(Debug, Deserialize)]
struct SeriesRow {
    #[allow(dead_code)]
    bin: usize,
    start_s: f64,
    total_iops: u64,
    read_iops: u64,
    write_iops: u64,
    unmap_ops: u64,
    unmap_len: u64,
    write_blocks: u64,
    unique_write_fraction: f64,
    read_ratio: f64,
}

impl SeriesRow {
    fn into_stats(self) -> BinStats {
        BinStats {
            total_iops: self.total_iops,
            read_iops: self.read_iops,
            write_iops: self.write_iops,
            unmap_ops: self.unmap_ops,
            unmap_len: self.unmap_len,
            write_blocks: self.write_blocks,
            unique_write_fraction: self.unique_write_fraction,
            read_ratio: self.read_ratio,
        }
    }
}

pub fn bins_per_day(interval: f64) -> Option<usize> {
    let per_day = 86_400.0 / interval;
    let rounded = per_day.round();
    ((per_day - rounded).abs() < 1e-9 && rounded >= 1.0).then_some(rounded as usize)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinConfig {
    pub interval: f64,
    pub block_size: u64,
    /// Dedup window in bins for the unique-write estimate.
    pub dedup_window: usize,
    /// Start of bin 0; defaults to the first timestamp floored to the
    /// interval grid.
    pub start_epoch: Option<f64>,
    /// Minimum number of bins to emit (trailing idle bins).
    pub min_bins: usize,
}

impl Default for BinConfig {
    fn default() -> Self {
        Self {
            interval: DEFAULT_INTERVAL_SECS,
            block_size: DEFAULT_BLOCK_SIZE,
            dedup_window: DEFAULT_DEDUP_WINDOW,
            start_epoch: None,
            min_bins: 0,
        }
    }
}

/// Bins sorted records into an [`IntensitySeries`].
///
/// A written block is unique unless the same `(lun, block)` address was
/// written within the last `dedup_window` bins (including earlier in the
/// current bin). Records before `start_epoch` are clamped into bin 0.
pub fn bin_series(records: &[TraceRecord], cfg: &BinConfig) -> Result<IntensitySeries> {
    if !(cfg.interval > 0.0) || cfg.block_size == 0 || cfg.dedup_window == 0 {
        return Err(Error::param(
            "interval, block size and dedup window must be positive",
        ));
    }
    let start_epoch = match (cfg.start_epoch, records.first()) {
        (Some(s), _) => s,
        (None, Some(r)) => (r.timestamp / cfg.interval).floor() * cfg.interval,
        (None, None) => 0.0,
    };
    let bin_of = |ts: f64| (((ts - start_epoch) / cfg.interval).floor().max(0.0)) as usize;
    let n_bins = records
        .iter()
        .map(|r| bin_of(r.timestamp) + 1)
        .max()
        .unwrap_or(0)
        .max(cfg.min_bins);

    let mut bins = vec![BinStats::default(); n_bins];
    let mut unique_blocks = vec![0u64; n_bins];
    let mut luns: HashMap<&str, u32> = HashMap::new();
    // (lun, block) -> last bin the address was written in.
    let mut last_written: HashMap<(u32, u64), usize> = HashMap::new();
    let mut pruned_at = 0usize;

    for rec in records {
        let k = bin_of(rec.timestamp);
        let bin = &mut bins[k];
        bin.total_iops += 1;
        match rec.op {
            Op::Read => bin.read_iops += 1,
            Op::Unmap => {
                bin.unmap_ops += 1;
                bin.unmap_len += rec.length;
            }
            Op::Write => {
                bin.write_iops += 1;
                let next_id = luns.len() as u32;
                let lun = *luns.entry(rec.lun.as_str()).or_insert(next_id);
                let first = rec.offset / cfg.block_size;
                let last = (rec.offset + rec.length - 1) / cfg.block_size;
                bin.write_blocks += last - first + 1;
                for block in first..=last {
                    let seen = last_written.insert((lun, block), k);
                    if seen.is_none_or(|prev| k - prev >= cfg.dedup_window) {
                        unique_blocks[k] += 1;
                    }
                }
            }
        }
        if k >= pruned_at + 4 * cfg.dedup_window {
            last_written.retain(|_, seen| k - *seen < cfg.dedup_window);
            pruned_at = k;
        }
    }

    for (bin, unique) in bins.iter_mut().zip(&unique_blocks) {
        bin.unique_write_fraction = if bin.write_blocks == 0 {
            1.0
        } else {
            *unique as f64 / bin.write_blocks as f64
        };
        bin.refresh_read_ratio();
    }

    Ok(IntensitySeries {
        interval: cfg.interval,
        start_epoch,
        bins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: f64, lun: &str, op: Op, offset: u64, length: u64) -> TraceRecord {
        TraceRecord {
            timestamp: t,
            lun: lun.into(),
            op,
            offset,
            length,
        }
    }

    #[test]
    fn distinct_writes_are_unique() {
        let recs = vec![
            rec(0.0, "l", Op::Write, 0, 4096),
            rec(1.0, "l", Op::Write, 4096, 4096),
            rec(2.0, "l", Op::Write, 8192, 4096),
        ];
        let s = bin_series(&recs, &BinConfig::default()).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.bins[0].write_iops, 3);
        assert_eq!(s.bins[0].write_blocks, 3);
        assert_eq!(s.bins[0].unique_write_fraction, 1.0);
    }

    #[test]
    fn repeated_address_halves_unique_fraction() {
        let recs = vec![
            rec(0.0, "l", Op::Write, 0, 4096),
            rec(5.0, "l", Op::Write, 0, 4096),
        ];
        let s = bin_series(&recs, &BinConfig::default()).unwrap();
        assert_eq!(s.bins[0].unique_write_fraction, 0.5);
    }

    #[test]
    fn same_offset_on_other_lun_is_unique() {
        let recs = vec![
            rec(0.0, "a", Op::Write, 0, 4096),
            rec(5.0, "b", Op::Write, 0, 4096),
        ];
        let s = bin_series(&recs, &BinConfig::default()).unwrap();
        assert_eq!(s.bins[0].unique_write_fraction, 1.0);
    }

    #[test]
    fn rewrite_outside_window_is_unique_again() {
        let cfg = BinConfig {
            interval: 10.0,
            dedup_window: 2,
            ..BinConfig::default()
        };
        let recs = vec![
            rec(0.0, "l", Op::Write, 0, 4096),
            rec(15.0, "l", Op::Write, 0, 4096),
            rec(45.0, "l", Op::Write, 0, 4096),
        ];
        let s = bin_series(&recs, &cfg).unwrap();
        assert_eq!(s.len(), 5);
        assert_eq!(s.bins[1].unique_write_fraction, 0.0);
        assert_eq!(s.bins[4].unique_write_fraction, 1.0);
    }

    #[test]
    fn unmap_accumulates_length() {
        let s = bin_series(
            &[rec(0.0, "l", Op::Unmap, 0, 1 << 20)],
            &BinConfig::default(),
        )
        .unwrap();
        assert_eq!(s.bins[0].unmap_len, 1_048_576);
        assert_eq!(s.bins[0].total_iops, 1);
    }

    #[test]
    fn multi_block_write_counts_blocks() {
        let s = bin_series(
            &[rec(0.0, "l", Op::Write, 2048, 8192)],
            &BinConfig::default(),
        )
        .unwrap();
        // Spans blocks 0, 1 and 2.
        assert_eq!(s.bins[0].write_blocks, 3);
    }

    #[test]
    fn empty_records_give_empty_series() {
        let s = bin_series(&[], &BinConfig::default()).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn read_ratio_uses_read_plus_write() {
        let recs = vec![
            rec(0.0, "l", Op::Read, 0, 4096),
            rec(0.0, "l", Op::Read, 0, 4096),
            rec(0.0, "l", Op::Read, 0, 4096),
            rec(0.0, "l", Op::Write, 0, 4096),
            rec(0.0, "l", Op::Unmap, 0, 4096),
        ];
        let s = bin_series(&recs, &BinConfig::default()).unwrap();
        assert_eq!(s.bins[0].read_ratio, 0.75);
        assert!(s.bins[0].read_iops + s.bins[0].write_iops <= s.bins[0].total_iops);
    }

    #[test]
    fn contiguous_bins_cover_gaps() {
        let recs = vec![
            rec(0.0, "l", Op::Read, 0, 512),
            rec(3000.0, "l", Op::Read, 0, 512),
        ];
        let s = bin_series(&recs, &BinConfig::default()).unwrap();
        assert_eq!(s.len(), 6);
        assert_eq!(s.bins[5].total_iops, 1);
        assert!(s.bins[1..5].iter().all(|b| b.total_iops == 0));
    }

    #[test]
    fn csv_round_trip() {
        let recs = vec![
            rec(0.0, "l", Op::Write, 0, 4096),
            rec(700.0, "l", Op::Read, 0, 4096),
        ];
        let s = bin_series(&recs, &BinConfig::default()).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = IntensitySeries::read_csv(buf.as_slice(), 600.0).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn bins_per_day_requires_even_split() {
        assert_eq!(bins_per_day(600.0), Some(144));
        assert_eq!(bins_per_day(3600.0), Some(24));
        assert_eq!(bins_per_day(700.0), None);
    }
}
