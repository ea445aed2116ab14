//! Scenario execution, traces, metrics and replay.

pub mod metrics;
pub mod runner;
pub mod trace;

use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::AgentClass;
use crate::netsim::CodecError;
use crate::scenario::FieldError;
use crate::sensor::SensorError;
use crate::social::PlanError;

pub use metrics::{compute_metrics, percentile, ConflictLead, RunMetrics};
pub use runner::{run, simulate, write_metrics, RunOptions, RunOutput, SimOutput};
pub use trace::{
    parse_trace, read_trace_file, write_trace, write_trace_file, AgentRecord, SendRecord, TickRecord, Trace,
    TraceError, TraceEvent, TraceHeader, TraceLine, SCHEMA_VERSION,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub match_gate_m: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig { match_gate_m: 1.5 }
    }
}

impl MetricsConfig {
    pub fn validate(&self) -> Result<(), FieldError> {
        if !(self.match_gate_m > 0.0) || !self.match_gate_m.is_finite() {
            return Err(FieldError::new("match_gate_m", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Trace(TraceError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Sensor(#[from] SensorError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("cannot {action} {path}: {source}")]
    Io {
        action: &'static str,
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("cannot write csv: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    pub fn io(action: &'static str, path: &Path, source: io::Error) -> Self {
        HarnessError::Io {
            action,
            path: path.display().to_string(),
            source,
        }
    }

    /// True for failures of the environment rather than of the input.
    pub fn is_io(&self) -> bool {
        matches!(self, HarnessError::Io { .. } | HarnessError::Trace(TraceError::Io { .. }))
    }
}

#[derive(Debug, Serialize)]
struct CsvRow {
    time_s: f64,
    bed_x: Option<f64>,
    bed_y: Option<f64>,
    bed_heading: Option<f64>,
    bed_speed: Option<f64>,
    chosen_offset: Option<f64>,
    chosen_speed: Option<f64>,
    min_clearance: Option<f64>,
    directive: &'static str,
}

/// Plot-ready per-tick table of the bed's motion and decisions; one row per
/// tick. Bed columns are empty for scenarios without a planner.
pub fn export_csv<W: Write>(trace: &Trace, out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    let bed_id = trace.header.bed_agent_id;
    for t in &trace.ticks {
        let bed = bed_id.and_then(|id| t.agents.iter().find(|a| a.agent_id == id));
        let min_clearance = bed.and_then(|b| {
            t.agents
                .iter()
                .filter(|a| a.class == AgentClass::Pedestrian)
                .map(|p| ((p.x - b.x).powi(2) + (p.y - b.y).powi(2)).sqrt())
                .reduce(f64::min)
        });
        let (directive, offset, speed) = t
            .events
            .iter()
            .find_map(|e| match e {
                TraceEvent::Plan { trajectory, .. } => {
                    Some(("plan", Some(trajectory.lateral_offset), Some(trajectory.target_speed)))
                }
                TraceEvent::Stop { .. } => Some(("stop", None, Some(0.0))),
                TraceEvent::Yield { directive, .. } => {
                    Some(("yield", Some(directive.hold_offset), Some(directive.speed_cap)))
                }
                TraceEvent::NoBedTrack { .. } => Some(("no_bed_track", None, Some(0.0))),
                _ => None,
            })
            .unwrap_or(("", None, None));
        w.serialize(CsvRow {
            time_s: t.time.as_secs(),
            bed_x: bed.map(|b| b.x),
            bed_y: bed.map(|b| b.y),
            bed_heading: bed.map(|b| b.heading),
            bed_speed: bed.map(|b| b.speed),
            chosen_offset: offset,
            chosen_speed: speed,
            min_clearance,
            directive,
        })?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Re-reads a trace and recomputes its metrics.
pub fn replay(trace_path: &Path, csv_path: Option<&Path>) -> Result<RunMetrics, HarnessError> {
    let trace = read_trace_file(trace_path)?;
    if let Some(p) = csv_path {
        let f = std::fs::File::create(p).map_err(|e| HarnessError::io("create", p, e))?;
        export_csv(&trace, io::BufWriter::new(f))?;
    }
    Ok(compute_metrics(&trace))
}
