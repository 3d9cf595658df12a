//! Block IO trace records and CSV ingestion.
//!
//! The canonical column layout is `timestamp,lun,op,offset,length` with
//! timestamps in seconds and offsets/lengths in bytes. SNIA-style block
//! traces are accepted through a small alias table; headerless SNIA files
//! are assumed to use the MSR Cambridge positional layout
//! (`Timestamp,Hostname,DiskNumber,Type,Offset,Size,ResponseTime`).
//! SNIA timestamps are 100 ns ticks and are rebased to the first record.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use flate2::read::MultiGzDecoder;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ticks per second for Windows FILETIME timestamps used by MSR traces.
const FILETIME_TICKS_PER_SEC: f64 = 1.0e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Read,
    Write,
    Unmap,
}

impl Op {
    pub fn as_str(&self) -> &'static str {
        match self {
            Op::Read => "read",
            Op::Write => "write",
            Op::Unmap => "unmap",
        }
    }
}

impl FromStr for Op {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "read" | "r" | "rs" => Ok(Op::Read),
            "write" | "w" | "ws" => Ok(Op::Write),
            "unmap" | "trim" | "discard" | "d" => Ok(Op::Unmap),
            other => Err(format!("unknown op {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Seconds since the trace epoch.
    pub timestamp: f64,
    pub lun: String,
    pub op: Op,
    /// Byte offset on the LUN.
    pub offset: u64,
    /// Length in bytes, always positive.
    pub length: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceFormat {
    CsvSnia,
    CsvGeneric,
}

impl FromStr for TraceFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "csv_snia" | "snia" => Ok(TraceFormat::CsvSnia),
            "csv_generic" | "csv" | "generic" => Ok(TraceFormat::CsvGeneric),
            other => Err(format!("unknown trace format {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParseOptions {
    /// Largest tolerated fraction of malformed data rows.
    pub malformed_threshold: f64,
    /// Records reaching past this many bytes are rejected as malformed.
    pub device_size: Option<u64>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            malformed_threshold: 0.001,
            device_size: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedTrace {
    /// Well-formed records, sorted by timestamp.
    pub records: Vec<TraceRecord>,
    pub malformed: usize,
    /// 1-based line number of the first malformed row.
    pub first_malformed_line: Option<usize>,
    /// Whether the input needed sorting.
    pub resorted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Column {
    Timestamp,
    Lun,
    Disk,
    Op,
    Offset,
    Length,
}

/// Header aliases, lowercase. `Disk` is appended to the LUN name when both
/// a host and a disk number are present.
const ALIASES: &[(&str, Column)] = &[
    ("timestamp", Column::Timestamp),
    ("timestamp_s", Column::Timestamp),
    ("time", Column::Timestamp),
    ("ts", Column::Timestamp),
    ("lun", Column::Lun),
    ("lun_id", Column::Lun),
    ("hostname", Column::Lun),
    ("host", Column::Lun),
    ("volume", Column::Lun),
    ("device", Column::Lun),
    ("devicenumber", Column::Disk),
    ("disknumber", Column::Disk),
    ("disk", Column::Disk),
    ("op", Column::Op),
    ("type", Column::Op),
    ("requesttype", Column::Op),
    ("iotype", Column::Op),
    ("rw", Column::Op),
    ("offset", Column::Offset),
    ("offset_bytes", Column::Offset),
    ("lba_bytes", Column::Offset),
    ("length", Column::Length),
    ("length_bytes", Column::Length),
    ("size", Column::Length),
    ("requestsize", Column::Length),
];

#[derive(Debug, Clone)]
struct Layout {
    timestamp: usize,
    lun: usize,
    disk: Option<usize>,
    op: usize,
    offset: usize,
    length: usize,
    filetime: bool,
}

impl Layout {
    fn generic() -> Self {
        Self {
            timestamp: 0,
            lun: 1,
            disk: None,
            op: 2,
            offset: 3,
            length: 4,
            filetime: false,
        }
    }

    fn msr() -> Self {
        Self {
            timestamp: 0,
            lun: 1,
            disk: Some(2),
            op: 3,
            offset: 4,
            length: 5,
            filetime: true,
        }
    }

    fn from_header(fields: &csv::StringRecord, format: TraceFormat) -> Result<Self> {
        let mut found: [Option<usize>; 6] = [None; 6];
        for (idx, name) in fields.iter().enumerate() {
            let key = name.trim().to_ascii_lowercase();
            if let Some((_, col)) = ALIASES.iter().find(|(alias, _)| *alias == key) {
                let slot = *col as usize;
                found[slot].get_or_insert(idx);
            }
        }
        let need = |col: Column| {
            found[col as usize].ok_or_else(|| Error::Format {
                line: 1,
                message: format!("header has no {col:?} column"),
            })
        };
        Ok(Self {
            timestamp: need(Column::Timestamp)?,
            lun: need(Column::Lun)?,
            disk: found[Column::Disk as usize],
            op: need(Column::Op)?,
            offset: need(Column::Offset)?,
            length: need(Column::Length)?,
            filetime: false,
        }
        .with_format(format))
    }

    fn with_format(mut self, format: TraceFormat) -> Self {
        self.filetime = format == TraceFormat::CsvSnia;
        self
    }

    fn parse(&self, row: &csv::StringRecord) -> std::result::Result<TraceRecord, String> {
        let get = |idx: usize| row.get(idx).map(str::trim).ok_or("missing column");
        let ts: f64 = get(self.timestamp)?
            .parse()
            .map_err(|_| "bad timestamp".to_string())?;
        if !ts.is_finite() || ts < 0.0 {
            return Err("negative or non-finite timestamp".into());
        }
        let mut lun = get(self.lun)?.to_string();
        if lun.is_empty() {
            return Err("empty lun".into());
        }
        if let Some(disk) = self.disk {
            lun = format!("{lun}:{}", get(disk)?);
        }
        let op: Op = get(self.op)?.parse()?;
        let offset: u64 = get(self.offset)?.parse().map_err(|_| "bad offset")?;
        let length: u64 = get(self.length)?.parse().map_err(|_| "bad length")?;
        if length == 0 {
            return Err("zero length".into());
        }
        Ok(TraceRecord {
            timestamp: ts,
            lun,
            op,
            offset,
            length,
        })
    }
}

fn looks_numeric(field: Option<&str>) -> bool {
    field.is_some_and(|f| f.trim().parse::<f64>().is_ok())
}

/// Parses a CSV block trace.
///
/// Malformed rows are skipped and counted; the call fails only when their
/// share of data rows exceeds `opts.malformed_threshold`.
pub fn parse_trace<R: Read>(
    source: R,
    format: TraceFormat,
    opts: &ParseOptions,
) -> Result<ParsedTrace> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(source);

    let mut out = ParsedTrace::default();
    let mut layout: Option<Layout> = None;
    let mut data_rows = 0usize;
    let mut row = csv::StringRecord::new();

    loop {
        match reader.read_record(&mut row) {
            Ok(true) => {}
            Ok(false) => break,
            Err(err) => {
                if let csv::ErrorKind::Io(_) = err.kind() {
                    return Err(err.into());
                }
                // Undecodable bytes count as a malformed row.
                let line = err.position().map(|p| p.line() as usize).unwrap_or(0);
                data_rows += 1;
                out.malformed += 1;
                out.first_malformed_line.get_or_insert(line);
                continue;
            }
        }
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        if row.iter().all(|f| f.is_empty()) {
            continue;
        }
        let lay = match &layout {
            Some(l) => l,
            None => {
                let first_is_data = looks_numeric(row.get(0));
                let l = if first_is_data {
                    match format {
                        TraceFormat::CsvGeneric => Layout::generic(),
                        TraceFormat::CsvSnia if row.len() >= 6 => Layout::msr(),
                        TraceFormat::CsvSnia => Layout::generic().with_format(format),
                    }
                } else {
                    Layout::from_header(&row, format)?
                };
                layout = Some(l);
                if !first_is_data {
                    continue;
                }
                layout.as_ref().unwrap()
            }
        };
        data_rows += 1;
        let parsed = lay.parse(&row).and_then(|rec| match opts.device_size {
            Some(dev)
                if rec
                    .offset
                    .checked_add(rec.length)
                    .is_none_or(|end| end > dev) =>
            {
                Err("extent past device size".to_string())
            }
            _ => Ok(rec),
        });
        match parsed {
            Ok(rec) => out.records.push(rec),
            Err(_) => {
                out.malformed += 1;
                out.first_malformed_line.get_or_insert(line);
            }
        }
    }

    if data_rows > 0 && out.malformed as f64 > opts.malformed_threshold * data_rows as f64 {
        return Err(Error::Format {
            line: out.first_malformed_line.unwrap_or(0),
            message: format!(
                "{} of {} rows malformed (threshold {:.3}%)",
                out.malformed,
                data_rows,
                opts.malformed_threshold * 100.0
            ),
        });
    }

    if layout.as_ref().is_some_and(|l| l.filetime) && !out.records.is_empty() {
        let base = out
            .records
            .iter()
            .map(|r| r.timestamp)
            .fold(f64::INFINITY, f64::min);
        for r in &mut out.records {
            r.timestamp = (r.timestamp - base) / FILETIME_TICKS_PER_SEC;
        }
    }

    if !out
        .records
        .windows(2)
        .all(|w| w[0].timestamp <= w[1].timestamp)
    {
        out.records
            .sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        out.resorted = true;
    }
    Ok(out)
}

/// Opens a trace file, transparently decompressing `.gz` files.
pub fn open_trace_file(path: &Path) -> Result<Box<dyn Read>> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("gz"))
    {
        Ok(Box::new(MultiGzDecoder::new(reader)))
    } else {
        Ok(Box::new(reader))
    }
}

/// Reads and parses a trace file.
pub fn read_trace_file(
    path: &Path,
    format: TraceFormat,
    opts: &ParseOptions,
) -> Result<ParsedTrace> {
    parse_trace(open_trace_file(path)?, format, opts)
}

/// Writes records in the canonical generic layout, header included.
pub fn write_trace<W: Write>(records: &[TraceRecord], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["timestamp", "lun", "op", "offset", "length"])?;
    for r in records {
        w.write_record([
            format_timestamp(r.timestamp),
            r.lun.clone(),
            r.op.as_str().to_string(),
            r.offset.to_string(),
            r.length.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn format_timestamp(ts: f64) -> String {
    // Shortest representation that round-trips.
    format!("{ts:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, threshold: f64) -> Result<ParsedTrace> {
        let opts = ParseOptions {
            malformed_threshold: threshold,
            device_size: None,
        };
        parse_trace(text.as_bytes(), TraceFormat::CsvGeneric, &opts)
    }

    #[test]
    fn maps_fields_directly() {
        let out = parse(
            "timestamp,lun,op,offset,length\n0.0,lun0,write,0,4096\n",
            0.001,
        )
        .unwrap();
        assert_eq!(
            out.records,
            vec![TraceRecord {
                timestamp: 0.0,
                lun: "lun0".into(),
                op: Op::Write,
                offset: 0,
                length: 4096,
            }]
        );
        assert_eq!(out.malformed, 0);
    }

    #[test]
    fn headerless_generic_row() {
        let out = parse("0.0,lun0,write,0,4096\n", 0.001).unwrap();
        assert_eq!(out.records.len(), 1);
    }

    #[test]
    fn empty_input_is_empty_trace() {
        let out = parse("", 0.001).unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.malformed, 0);
    }

    #[test]
    fn malformed_rows_counted_below_threshold() {
        let out = parse(
            "timestamp,lun,op,offset,length\n0.0,lun0,write,0,4096\nx,y\n",
            0.5,
        )
        .unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.malformed, 1);
        assert_eq!(out.first_malformed_line, Some(3));
    }

    #[test]
    fn malformed_rows_above_threshold_fail_with_line() {
        let err = parse(
            "timestamp,lun,op,offset,length\n0.0,lun0,write,0,4096\nx,y\n",
            0.001,
        )
        .unwrap_err();
        match err {
            Error::Format { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_length_is_malformed() {
        let out = parse("0.0,l,read,0,0\n1.0,l,read,0,512\n", 0.6).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.malformed, 1);
    }

    #[test]
    fn unordered_input_is_sorted() {
        let out = parse(
            "5.0,a,read,0,512\n1.0,a,write,0,512\n3.0,b,unmap,0,512\n",
            0.0,
        )
        .unwrap();
        let ts: Vec<f64> = out.records.iter().map(|r| r.timestamp).collect();
        assert_eq!(ts, vec![1.0, 3.0, 5.0]);
        assert!(out.resorted);
    }

    #[test]
    fn device_size_rejects_overflowing_extent() {
        let opts = ParseOptions {
            malformed_threshold: 1.0,
            device_size: Some(8192),
        };
        let out = parse_trace(
            "0,a,read,4096,4096\n1,a,read,4096,8192\n".as_bytes(),
            TraceFormat::CsvGeneric,
            &opts,
        )
        .unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.malformed, 1);
    }

    #[test]
    fn snia_alias_header() {
        let text = "Timestamp,Hostname,DiskNumber,Type,Offset,Size,ResponseTime\n\
                    10,web,0,Read,8192,4096,120\n";
        let out = parse_trace(
            text.as_bytes(),
            TraceFormat::CsvSnia,
            &ParseOptions::default(),
        )
        .unwrap();
        assert_eq!(out.records[0].lun, "web:0");
        assert_eq!(out.records[0].op, Op::Read);
        assert_eq!(out.records[0].timestamp, 0.0);
    }

    #[test]
    fn msr_positional_filetime() {
        let text = "128166372003061629,hm,1,Write,3154152448,4096,1155\n\
                    128166372013061629,hm,1,Read,3154152448,4096,1155\n";
        let out = parse_trace(
            text.as_bytes(),
            TraceFormat::CsvSnia,
            &ParseOptions::default(),
        )
        .unwrap();
        assert_eq!(out.records.len(), 2);
        assert!((out.records[1].timestamp - 1.0).abs() < 1e-6);
        assert_eq!(out.records[0].lun, "hm:1");
    }

    #[test]
    fn gzip_by_extension() {
        use flate2::write::GzEncoder;
        use flate2::Compression;
        let dir = std::env::temp_dir().join(format!("bgsched-gz-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.csv.gz");
        let mut enc = GzEncoder::new(File::create(&path).unwrap(), Compression::fast());
        enc.write_all(b"0.5,l,read,0,512\n").unwrap();
        enc.finish().unwrap();
        let out =
            read_trace_file(&path, TraceFormat::CsvGeneric, &ParseOptions::default()).unwrap();
        assert_eq!(out.records.len(), 1);
        std::fs::remove_dir_all(&dir).ok();
    }
}
