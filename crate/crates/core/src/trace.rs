//! Tracker-trace ingestion and swarm life-cycle statistics.
//!
//! A trace is a CSV file with header `timestamp,seeders,leechers` and
//! ISO-8601 local timestamps (`YYYY-MM-DDTHH:MM:SS`), strictly increasing.
//! Traces carry no timezone; one trace is one consistent local clock.

use std::fmt::Write as _;
use std::io::BufRead;

use chrono::NaiveDateTime;
use serde_json::json;
use thiserror::Error;

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";
const HEADER: &str = "timestamp,seeders,leechers";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("read error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line 1: expected header `{HEADER}`, found `{found}`")]
    BadHeader { found: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {column} count is negative ({value})")]
    NegativeCount {
        line: usize,
        column: &'static str,
        value: i64,
    },
    #[error("timestamps must be strictly increasing; {timestamp} does not advance past its predecessor")]
    Ordering { timestamp: String },
    #[error("trace is empty")]
    EmptyTrace,
    #[error("formation time {formation} is after the first observation {first}")]
    FormationAfterFirst { formation: String, first: String },
    #[error("cannot form a ratio: {field} of the reference record is zero")]
    DivisionDomain { field: &'static str },
}

/// One timestamped tracker observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRecord {
    pub timestamp: NaiveDateTime,
    pub seeders: u64,
    pub leechers: u64,
}

impl TraceRecord {
    pub fn new(timestamp: NaiveDateTime, seeders: u64, leechers: u64) -> Self {
        Self {
            timestamp,
            seeders,
            leechers,
        }
    }
}

/// Parses a trace, validating the header, field shapes, nonnegative counts
/// and strict timestamp order. A header-only input yields an empty list.
pub fn parse_trace<R: BufRead>(input: R) -> Result<Vec<TraceRecord>, TraceError> {
    let mut records = Vec::new();
    let mut lines = input.lines();

    let header = match lines.next() {
        Some(line) => line?,
        None => {
            return Err(TraceError::BadHeader {
                found: String::new(),
            })
        }
    };
    if header.trim_end() != HEADER {
        return Err(TraceError::BadHeader {
            found: header.trim_end().to_string(),
        });
    }

    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2; // 1-based, after the header
        let line = line?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(TraceError::Parse {
                line: line_no,
                message: format!("expected 3 comma-separated fields, found {}", fields.len()),
            });
        }
        let timestamp =
            NaiveDateTime::parse_from_str(fields[0], TIMESTAMP_FORMAT).map_err(|e| {
                TraceError::Parse {
                    line: line_no,
                    message: format!("bad timestamp `{}`: {e}", fields[0]),
                }
            })?;
        let count = |column: &'static str, text: &str| -> Result<u64, TraceError> {
            let value: i64 = text.parse().map_err(|_| TraceError::Parse {
                line: line_no,
                message: format!("bad {column} count `{text}`"),
            })?;
            if value < 0 {
                return Err(TraceError::NegativeCount {
                    line: line_no,
                    column,
                    value,
                });
            }
            Ok(value as u64)
        };
        let seeders = count("seeders", fields[1])?;
        let leechers = count("leechers", fields[2])?;

        if let Some(prev) = records.last() {
            let prev: &TraceRecord = prev;
            if timestamp <= prev.timestamp {
                return Err(TraceError::Ordering {
                    timestamp: timestamp.format(TIMESTAMP_FORMAT).to_string(),
                });
            }
        }
        records.push(TraceRecord::new(timestamp, seeders, leechers));
    }
    Ok(records)
}

/// Renders records back to the CSV form [`parse_trace`] reads.
pub fn render_trace(records: &[TraceRecord]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{}",
            r.timestamp.format(TIMESTAMP_FORMAT),
            r.seeders,
            r.leechers
        );
    }
    out
}

/// Life-cycle statistics of one swarm trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwarmSummary {
    pub peak_seeders: (NaiveDateTime, u64),
    pub peak_leechers: (NaiveDateTime, u64),
    pub first: TraceRecord,
    pub last: TraceRecord,
    /// Last observed count over the peak count; 1.0 for an all-zero column.
    pub seeder_decay_ratio: f64,
    pub leecher_decay_ratio: f64,
    /// Hours from the caller-supplied formation time to the seeder peak.
    pub hours_to_peak: f64,
}

impl SwarmSummary {
    /// Flat JSON object, timestamps in the trace format.
    pub fn to_json(&self) -> serde_json::Value {
        let ts = |t: NaiveDateTime| t.format(TIMESTAMP_FORMAT).to_string();
        json!({
            "peak_seeders_time": ts(self.peak_seeders.0),
            "peak_seeders": self.peak_seeders.1,
            "peak_leechers_time": ts(self.peak_leechers.0),
            "peak_leechers": self.peak_leechers.1,
            "first_time": ts(self.first.timestamp),
            "first_seeders": self.first.seeders,
            "first_leechers": self.first.leechers,
            "last_time": ts(self.last.timestamp),
            "last_seeders": self.last.seeders,
            "last_leechers": self.last.leechers,
            "seeder_decay_ratio": self.seeder_decay_ratio,
            "leecher_decay_ratio": self.leecher_decay_ratio,
            "hours_to_peak": self.hours_to_peak,
        })
    }
}

fn decay(last: u64, peak: u64) -> f64 {
    if peak == 0 {
        1.0
    } else {
        last as f64 / peak as f64
    }
}

/// Peaks (earliest timestamp wins ties), decay ratios, and hours from
/// `formation_time` to the seeder peak.
pub fn summarize(
    records: &[TraceRecord],
    formation_time: NaiveDateTime,
) -> Result<SwarmSummary, TraceError> {
    let first = *records.first().ok_or(TraceError::EmptyTrace)?;
    let last = *records.last().expect("nonempty");
    if formation_time > first.timestamp {
        return Err(TraceError::FormationAfterFirst {
            formation: formation_time.format(TIMESTAMP_FORMAT).to_string(),
            first: first.timestamp.format(TIMESTAMP_FORMAT).to_string(),
        });
    }

    let mut peak_seeders = (first.timestamp, first.seeders);
    let mut peak_leechers = (first.timestamp, first.leechers);
    for r in &records[1..] {
        if r.seeders > peak_seeders.1 {
            peak_seeders = (r.timestamp, r.seeders);
        }
        if r.leechers > peak_leechers.1 {
            peak_leechers = (r.timestamp, r.leechers);
        }
    }

    let hours_to_peak = (peak_seeders.0 - formation_time).num_seconds() as f64 / 3600.0;

    Ok(SwarmSummary {
        peak_seeders,
        peak_leechers,
        first,
        last,
        seeder_decay_ratio: decay(last.seeders, peak_seeders.1),
        leecher_decay_ratio: decay(last.leechers, peak_leechers.1),
        hours_to_peak,
    })
}

/// Elementwise count ratios of two observations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwarmComparison {
    pub leecher_ratio: f64,
    pub seeder_ratio: f64,
}

/// `a` over `b`, per column. `b` must have nonzero counts in both columns.
pub fn compare_swarms(a: &TraceRecord, b: &TraceRecord) -> Result<SwarmComparison, TraceError> {
    if b.leechers == 0 {
        return Err(TraceError::DivisionDomain { field: "leechers" });
    }
    if b.seeders == 0 {
        return Err(TraceError::DivisionDomain { field: "seeders" });
    }
    Ok(SwarmComparison {
        leecher_ratio: a.leechers as f64 / b.leechers as f64,
        seeder_ratio: a.seeders as f64 / b.seeders as f64,
    })
}
