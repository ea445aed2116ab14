//! Newline-delimited JSON run traces.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fusion::{GlobalPicture, IngestOutcome, TrackSnapshot};
use crate::geometry::{AgentClass, Timestamp};
use crate::hazard::ConflictEvent;
use crate::sensor::Detection;
use crate::social::{MotionCommand, PlannedTrajectory, YieldDirective};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub schema_version: u32,
    pub scenario: String,
    pub seed: u64,
    pub tick_dt_us: u64,
    pub tick_count: u64,
    /// Ground-truth to track matching gate used by the metrics.
    pub match_gate_m: f64,
    pub conflict_radius_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bed_agent_id: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub agent_id: u32,
    pub class: AgentClass,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SendRecord {
    pub node_id: u16,
    pub seq: u32,
    pub records: usize,
    pub bytes: usize,
    pub send_time: Timestamp,
    pub delivery_time: Timestamp,
    pub dropped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TraceEvent {
    Conflict(ConflictEvent),
    WarningSent {
        event_id: u64,
        subscriber_id: u32,
        send_time: Timestamp,
        delivery_time: Timestamp,
        dropped: bool,
    },
    WarningDelivered {
        event_id: u64,
        subscriber_id: u32,
        delivered_at: Timestamp,
    },
    Plan {
        now: Timestamp,
        bed: TrackSnapshot,
        persons: Vec<TrackSnapshot>,
        trajectory: PlannedTrajectory,
    },
    Stop {
        now: Timestamp,
        bed: TrackSnapshot,
        persons: Vec<TrackSnapshot>,
        reason: String,
    },
    Yield {
        now: Timestamp,
        bed: TrackSnapshot,
        persons: Vec<TrackSnapshot>,
        directive: YieldDirective,
    },
    NoBedTrack {
        now: Timestamp,
    },
}

/// Everything that happened in one tick window `[time, time + dt)`.
/// Agent states are at `time`; the picture is as of the end of the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub index: u64,
    pub time: Timestamp,
    pub agents: Vec<AgentRecord>,
    /// Agents geometrically visible to at least one node.
    pub covered: Vec<u32>,
    pub detections: Vec<Detection>,
    pub sent: Vec<SendRecord>,
    pub ingests: Vec<IngestOutcome>,
    pub picture: GlobalPicture,
    pub events: Vec<TraceEvent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bed_command: Option<MotionCommand>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceLine {
    Header(TraceHeader),
    Tick(TickRecord),
}

/// A parsed and structurally checked trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub header: TraceHeader,
    pub ticks: Vec<TickRecord>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("no records")]
    NoRecords,
    #[error("trace schema version {found} is not supported (expected {SCHEMA_VERSION})")]
    SchemaVersion { found: u32 },
    #[error("first record is not a header")]
    MissingHeader,
    #[error("corrupt record {index}: {message}")]
    Corrupt { index: usize, message: String },
    #[error("trace truncated: record {index} is missing")]
    Missing { index: usize },
    #[error("cannot {action} {path}: {source}")]
    Io {
        action: &'static str,
        path: String,
        #[source]
        source: io::Error,
    },
}

impl TraceError {
    pub fn io(action: &'static str, path: &Path, source: io::Error) -> Self {
        TraceError::Io {
            action,
            path: path.display().to_string(),
            source,
        }
    }
}

impl Trace {
    /// Record index 0 is the header; tick `k` is record `k + 1`.
    pub fn from_lines(lines: Vec<TraceLine>) -> Result<Trace, TraceError> {
        let mut it = lines.into_iter();
        let header = match it.next() {
            None => return Err(TraceError::NoRecords),
            Some(TraceLine::Header(h)) => h,
            Some(TraceLine::Tick(_)) => return Err(TraceError::MissingHeader),
        };
        if header.schema_version != SCHEMA_VERSION {
            return Err(TraceError::SchemaVersion {
                found: header.schema_version,
            });
        }
        let mut ticks = Vec::new();
        for (k, line) in it.enumerate() {
            match line {
                TraceLine::Tick(t) if t.index == k as u64 => ticks.push(t),
                TraceLine::Tick(t) => {
                    return Err(TraceError::Corrupt {
                        index: k + 1,
                        message: format!("expected tick {k}, found tick {}", t.index),
                    })
                }
                TraceLine::Header(_) => {
                    return Err(TraceError::Corrupt {
                        index: k + 1,
                        message: "unexpected header".into(),
                    })
                }
            }
        }
        if (ticks.len() as u64) < header.tick_count {
            return Err(TraceError::Missing { index: ticks.len() + 1 });
        }
        Ok(Trace { header, ticks })
    }

    pub fn to_lines(&self) -> Vec<TraceLine> {
        std::iter::once(TraceLine::Header(self.header.clone()))
            .chain(self.ticks.iter().cloned().map(TraceLine::Tick))
            .collect()
    }
}

pub fn write_trace<W: Write>(mut w: W, header: &TraceHeader, ticks: &[TickRecord]) -> io::Result<()> {
    serde_json::to_writer(&mut w, &TraceLine::Header(header.clone()))?;
    w.write_all(b"\n")?;
    for t in ticks {
        serde_json::to_writer(&mut w, &TraceLine::Tick(t.clone()))?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn write_trace_file(path: &Path, header: &TraceHeader, ticks: &[TickRecord]) -> Result<(), TraceError> {
    let f = File::create(path).map_err(|e| TraceError::io("create", path, e))?;
    write_trace(BufWriter::new(f), header, ticks).map_err(|e| TraceError::io("write", path, e))
}

pub fn parse_trace<R: BufRead>(reader: R) -> Result<Trace, TraceError> {
    let mut lines = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| TraceError::Corrupt {
            index,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: TraceLine = serde_json::from_str(&line).map_err(|e| {
            // a bad header is reported as a version problem when that is what it is
            if index == 0 {
                if let Ok(v) = serde_json::from_str::<serde_json::Value>(&line) {
                    if let Some(found) = v.get("schema_version").and_then(|s| s.as_u64()) {
                        if found != SCHEMA_VERSION as u64 {
                            return TraceError::SchemaVersion { found: found as u32 };
                        }
                    }
                }
            }
            TraceError::Corrupt {
                index,
                message: e.to_string(),
            }
        })?;
        lines.push(parsed);
    }
    Trace::from_lines(lines)
}

pub fn read_trace_file(path: &Path) -> Result<Trace, TraceError> {
    let f = File::open(path).map_err(|e| TraceError::io("open", path, e))?;
    parse_trace(BufReader::new(f))
}
