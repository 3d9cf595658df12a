//! Seeded synthetic workloads with a daily intensity cycle.
//!
//! Per-bin targets (operation counts, write blocks, unique blocks, unmap
//! bytes) are drawn from one RNG stream; record-level details (timestamps,
//! LUNs, addresses) come from a second stream. Binning a synthesized trace
//! therefore reproduces [`synthesize_series`] exactly for the same seed.

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::record::{Op, TraceRecord};
use super::series::{BinStats, IntensitySeries};
use crate::error::{Error, Result};

const DETAIL_STREAM: u64 = 0x5eed_0fde_7a11;

/// Normalised daily intensity shape, sampled at the fraction of the day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DailyShape {
    Flat,
    /// Busy working day with a morning boot storm, a post-lunch bump and a
    /// quiet night.
    Vdi,
    /// Explicit multipliers spread evenly over the day.
    Custom(Vec<f64>),
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn bump(h: f64, centre: f64, width: f64) -> f64 {
    (-0.5 * ((h - centre) / width).powi(2)).exp()
}

impl DailyShape {
    /// Multiplier in `[0, 1]` at `day_fraction ∈ [0, 1)`.
    pub fn value(&self, day_fraction: f64) -> f64 {
        match self {
            DailyShape::Flat => 1.0,
            DailyShape::Vdi => {
                let h = day_fraction * 24.0;
                let day = logistic((h - 7.5) / 0.5) * logistic((18.5 - h) / 0.7);
                let storms = 0.25 * bump(h, 9.0, 0.8) + 0.15 * bump(h, 13.5, 0.8);
                0.05 + 0.95 * (0.75 * day + storms).min(1.0)
            }
            DailyShape::Custom(points) => {
                if points.is_empty() {
                    return 0.0;
                }
                let idx =
                    ((day_fraction * points.len() as f64).floor() as usize).min(points.len() - 1);
                points[idx]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticProfile {
    /// Duration in days.
    pub days: f64,
    /// Bin width in seconds.
    pub interval: f64,
    /// Calendar date of bin 0, used for weekend scaling.
    pub start_date: NaiveDate,
    /// Foreground IOPS where the shape equals 1.
    pub peak_iops: f64,
    pub shape: DailyShape,
    /// Intensity multiplier for Saturdays and Sundays.
    pub weekend_factor: f64,
    /// Read ratio at the quietest and busiest points; interpolated by shape.
    pub read_ratio_idle: f64,
    pub read_ratio_busy: f64,
    pub unique_fraction: f64,
    /// Unmap bytes per second at shape 1.
    pub unmap_bytes_per_sec: f64,
    pub unmap_size: u64,
    /// Relative standard deviation of the per-bin multiplicative noise.
    pub noise: f64,
    pub luns: usize,
    pub block_size: u64,
    /// Blocks written per write op.
    pub write_blocks_per_op: u64,
}

impl Default for SyntheticProfile {
    fn default() -> Self {
        Self {
            days: 6.0,
            interval: 600.0,
            start_date: NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(),
            peak_iops: 100.0,
            shape: DailyShape::Vdi,
            weekend_factor: 1.0,
            read_ratio_idle: 0.5,
            read_ratio_busy: 0.7,
            unique_fraction: 0.6,
            unmap_bytes_per_sec: 0.0,
            unmap_size: 1 << 20,
            noise: 0.0,
            luns: 3,
            block_size: 4096,
            write_blocks_per_op: 1,
        }
    }
}

impl SyntheticProfile {
    pub fn flat(iops: f64, days: f64) -> Self {
        Self {
            days,
            peak_iops: iops,
            shape: DailyShape::Flat,
            read_ratio_idle: 0.7,
            read_ratio_busy: 0.7,
            ..Self::default()
        }
    }

    pub fn vdi(peak_iops: f64, days: f64) -> Self {
        Self {
            days,
            peak_iops,
            ..Self::default()
        }
    }

    pub fn n_bins(&self) -> usize {
        (self.days * 86_400.0 / self.interval).ceil() as usize
    }

    fn validate(&self) -> Result<()> {
        if !(self.days > 0.0) || !(self.interval > 0.0) {
            return Err(Error::param(
                "synthetic duration and interval must be positive",
            ));
        }
        if !(self.peak_iops >= 0.0) || !(self.noise >= 0.0) || !(self.weekend_factor >= 0.0) {
            return Err(Error::param(
                "intensity, noise and weekend factor must be non-negative",
            ));
        }
        for r in [
            self.read_ratio_idle,
            self.read_ratio_busy,
            self.unique_fraction,
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::param("ratios must lie in [0, 1]"));
            }
        }
        if self.luns == 0
            || self.block_size == 0
            || self.write_blocks_per_op == 0
            || self.unmap_size == 0
        {
            return Err(Error::param(
                "luns, block size, blocks per write and unmap size must be positive",
            ));
        }
        Ok(())
    }

    /// Noise-free intensity (IOPS) at bin `k`.
    pub fn expected_iops(&self, k: usize) -> f64 {
        let t = k as f64 * self.interval;
        let day = (t / 86_400.0).floor();
        let frac = t / 86_400.0 - day;
        let date = self.start_date + Duration::days(day as i64);
        let weekday = matches!(date.weekday(), Weekday::Sat | Weekday::Sun);
        let wk = if weekday { self.weekend_factor } else { 1.0 };
        self.peak_iops * self.shape.value(frac) * wk
    }

    fn read_ratio_at(&self, k: usize) -> f64 {
        let frac = (k as f64 * self.interval / 86_400.0).fract();
        let s = self.shape.value(frac).clamp(0.0, 1.0);
        self.read_ratio_idle + (self.read_ratio_busy - self.read_ratio_idle) * s
    }
}

#[derive(Debug, Clone, Copy)]
struct BinTarget {
    reads: u64,
    writes: u64,
    write_blocks: u64,
    unique_blocks: u64,
    unmap_len: u64,
    unmap_ops: u64,
}

fn targets(profile: &SyntheticProfile, seed: u64) -> Result<Vec<BinTarget>> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = (0..profile.n_bins())
        .map(|k| {
            let z: f64 = StandardNormal.sample(&mut rng);
            let factor = (1.0 + profile.noise * z).max(0.0);
            let level = profile.expected_iops(k) * profile.interval * factor;
            let fg = level.round() as u64;
            let reads = (fg as f64 * profile.read_ratio_at(k)).round() as u64;
            let writes = fg - reads;
            let write_blocks = writes * profile.write_blocks_per_op;
            let unique_blocks = (write_blocks as f64 * profile.unique_fraction).round() as u64;
            let shape_scale = if profile.peak_iops > 0.0 {
                level / profile.peak_iops
            } else {
                0.0
            };
            let unmap_len = (profile.unmap_bytes_per_sec * shape_scale).round() as u64;
            let unmap_ops = unmap_len.div_ceil(profile.unmap_size);
            BinTarget {
                reads,
                writes,
                write_blocks,
                unique_blocks,
                unmap_len,
                unmap_ops,
            }
        })
        .collect();
    Ok(out)
}

/// Generates the binned series directly, without materialising records.
pub fn synthesize_series(profile: &SyntheticProfile, seed: u64) -> Result<IntensitySeries> {
    let bins = targets(profile, seed)?
        .into_iter()
        .map(|t| {
            let mut b = BinStats {
                total_iops: t.reads + t.writes + t.unmap_ops,
                read_iops: t.reads,
                write_iops: t.writes,
                unmap_ops: t.unmap_ops,
                unmap_len: t.unmap_len,
                write_blocks: t.write_blocks,
                unique_write_fraction: if t.write_blocks == 0 {
                    1.0
                } else {
                    t.unique_blocks as f64 / t.write_blocks as f64
                },
                read_ratio: 0.0,
            };
            b.refresh_read_ratio();
            b
        })
        .collect();
    Ok(IntensitySeries {
        interval: profile.interval,
        start_epoch: 0.0,
        bins,
    })
}

/// Generates individual trace records.
///
/// Multi-block writes are laid out contiguously; a rewrite reuses the
/// extent of an earlier fresh write in the same or the previous bin, so
/// the binned unique fraction matches the profile whenever every rewrite
/// has a fresh write to target.
pub fn synthesize_trace(profile: &SyntheticProfile, seed: u64) -> Result<Vec<TraceRecord>> {
    let plan = targets(profile, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ DETAIL_STREAM);
    let luns: Vec<String> = (0..profile.luns).map(|i| format!("lun{i}")).collect();
    let extent = profile.write_blocks_per_op * profile.block_size;
    let lun_bytes: u64 = 1 << 40;
    let mut cursor = vec![0u64; profile.luns];
    let mut prev_fresh: Vec<(usize, u64)> = Vec::new();
    let mut records = Vec::new();

    for (k, t) in plan.iter().enumerate() {
        let start = k as f64 * profile.interval;
        let stamp = |rng: &mut ChaCha8Rng| start + rng.random::<f64>() * profile.interval;

        let mut writes: Vec<f64> = (0..t.writes).map(|_| stamp(&mut rng)).collect();
        writes.sort_by(f64::total_cmp);
        let fresh_ops = if t.writes == 0 {
            0
        } else {
            t.unique_blocks
                .div_ceil(profile.write_blocks_per_op)
                .min(t.writes)
        };
        let mut fresh: Vec<(usize, u64)> = Vec::with_capacity(fresh_ops as usize);
        for (i, ts) in writes.into_iter().enumerate() {
            let reuse_pool = if fresh.is_empty() {
                &prev_fresh
            } else {
                &fresh
            };
            let (lun, offset) = if (i as u64) < fresh_ops || reuse_pool.is_empty() {
                let lun = rng.random_range(0..profile.luns);
                let off = cursor[lun];
                cursor[lun] = (cursor[lun] + extent) % lun_bytes;
                fresh.push((lun, off));
                (lun, off)
            } else {
                reuse_pool[rng.random_range(0..reuse_pool.len())]
            };
            records.push(TraceRecord {
                timestamp: ts,
                lun: luns[lun].clone(),
                op: Op::Write,
                offset,
                length: extent,
            });
        }
        if !fresh.is_empty() {
            prev_fresh = fresh;
        }

        for _ in 0..t.reads {
            let lun = rng.random_range(0..profile.luns);
            let block = rng.random_range(0..lun_bytes / profile.block_size);
            records.push(TraceRecord {
                timestamp: stamp(&mut rng),
                lun: luns[lun].clone(),
                op: Op::Read,
                offset: block * profile.block_size,
                length: profile.block_size,
            });
        }

        let mut remaining = t.unmap_len;
        for _ in 0..t.unmap_ops {
            let len = remaining.min(profile.unmap_size);
            remaining -= len;
            let lun = rng.random_range(0..profile.luns);
            let block = rng.random_range(0..lun_bytes / profile.block_size / 2);
            records.push(TraceRecord {
                timestamp: stamp(&mut rng),
                lun: luns[lun].clone(),
                op: Op::Unmap,
                offset: block * profile.block_size,
                length: len,
            });
        }
    }
    records.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    Ok(records)
}
