//! Lockstep scenario execution.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;

use super::metrics::{compute_metrics, RunMetrics};
use super::trace::{
    read_trace_file, write_trace_file, AgentRecord, SendRecord, TickRecord, TraceError, TraceEvent, TraceHeader,
    SCHEMA_VERSION,
};
use super::HarnessError;
use crate::fusion::FusionEngine;
use crate::geometry::{AgentClass, Timestamp};
use crate::hazard::{Dispatcher, HazardMonitor};
use crate::netsim::{decode, encode, CaptureWriter, DeliveryQueue, InTransit, LinkProfile};
use crate::rng::{stream, Domain, Stream};
use crate::scenario::{step_world, ScenarioSpec, WorldState};
use crate::sensor::{make_message, sense, visible, Detection, SensorNodeConfig};
use crate::social::{kinematic_step, Decision, Limits, PathState, Planner, SocialNavigator};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Sleep to wall-clock tick boundaries.
    pub realtime: bool,
    /// Run node pipelines in parallel each tick.
    pub concurrent: bool,
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub header: TraceHeader,
    pub ticks: Vec<TickRecord>,
    /// Every frame handed to a link, in send order.
    pub frames: Vec<Vec<u8>>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace_path: PathBuf,
    pub metrics_path: PathBuf,
    pub capture_path: PathBuf,
    pub metrics: RunMetrics,
}

struct NodeRuntime {
    config: SensorNodeConfig,
    link: LinkProfile,
    sense_rng: Stream,
    uplink_rng: Stream,
    next_seq: u32,
    next_sense_us: u64,
    period_us: u64,
}

struct NodeOutput {
    node_id: u16,
    seq: u32,
    detections: Vec<Detection>,
    transit: InTransit<Vec<u8>>,
    reorder_allowed: bool,
}

impl NodeRuntime {
    fn tick(&mut self, world: &WorldState) -> Result<Option<NodeOutput>, HarnessError> {
        if world.time.0 < self.next_sense_us {
            return Ok(None);
        }
        self.next_sense_us += self.period_us;
        let detections = sense(&self.config, world, &mut self.sense_rng);
        let seq = self.next_seq;
        self.next_seq = self.next_seq.wrapping_add(1);
        let msg = make_message(self.config.node_id, &detections, world.time, seq)?;
        let frame = encode(&msg)?;
        let transit = self.link.send(frame, world.time, &mut self.uplink_rng);
        Ok(Some(NodeOutput {
            node_id: self.config.node_id,
            seq,
            detections,
            transit,
            reorder_allowed: self.link.reorder_allowed,
        }))
    }
}

struct BedSim {
    agent_id: u32,
    navigator: SocialNavigator,
    planner: Planner,
    limits: Limits,
    state: PathState,
}

fn agent_records(world: &WorldState) -> Vec<AgentRecord> {
    world
        .agents
        .iter()
        .map(|a| AgentRecord {
            agent_id: a.agent_id,
            class: a.class,
            x: a.pose.x,
            y: a.pose.y,
            heading: a.pose.heading,
            speed: a.speed,
        })
        .collect()
}

fn missing_link(what: &str, name: &str) -> HarnessError {
    HarnessError::Invalid(format!("{what} refers to unknown link `{name}`"))
}

/// Runs the scenario in memory. `seed` replaces the scenario's own seed.
pub fn simulate(spec: &ScenarioSpec, seed: u64, opts: &RunOptions) -> Result<SimOutput, HarnessError> {
    spec.validate().map_err(|e| HarnessError::Invalid(format!("{}: {}", e.field, e.reason)))?;
    let tick_us = spec.tick_micros();
    let tick_count = spec.tick_count();
    let dt = tick_us as f64 * 1e-6;

    let mut world = WorldState::initial(spec);
    let mut nodes = spec
        .nodes
        .iter()
        .map(|n| {
            Ok(NodeRuntime {
                config: n.clone(),
                link: spec.link(&n.link).ok_or_else(|| missing_link("node", &n.link))?.clone(),
                sense_rng: stream(seed, Domain::Sensing, n.node_id as u64),
                uplink_rng: stream(seed, Domain::Uplink, n.node_id as u64),
                next_seq: 0,
                next_sense_us: 0,
                period_us: crate::geometry::secs_to_micros(n.detection_period_s),
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;

    let mut engine = FusionEngine::new(spec.fusion.clone(), &spec.nodes);
    let mut hazard = HazardMonitor::new(spec.hazard.clone());
    let mut dispatcher = Dispatcher::new(&spec.subscribers, &spec.links, seed);
    let mut uplink: DeliveryQueue<Vec<u8>> = DeliveryQueue::new();
    let mut downlink: DeliveryQueue<u64> = DeliveryQueue::new();

    let mut bed = match &spec.planner {
        None => None,
        Some(cfg) => {
            let boundary = spec.boundary.as_deref().unwrap_or_default();
            let path = spec.reference_path.as_deref().unwrap_or_default();
            let planner = Planner::new(cfg.clone(), boundary, path)?;
            let agent = world
                .agent(cfg.bed_agent_id)
                .ok_or_else(|| HarnessError::Invalid(format!("bed agent {} not found", cfg.bed_agent_id)))?;
            let (s, d) = planner.path().project(agent.position());
            Some(BedSim {
                agent_id: cfg.bed_agent_id,
                navigator: SocialNavigator::new(planner.clone()),
                limits: planner.limits(),
                planner,
                state: PathState { s, d, v: 0.0 },
            })
        }
    };

    let header = TraceHeader {
        schema_version: SCHEMA_VERSION,
        scenario: spec.name.clone(),
        seed,
        tick_dt_us: tick_us,
        tick_count,
        match_gate_m: spec.metrics.match_gate_m,
        conflict_radius_m: spec.hazard.conflict_radius_m,
        bed_agent_id: spec.planner.as_ref().map(|p| p.bed_agent_id),
    };

    let mut ticks = Vec::with_capacity(tick_count as usize);
    let mut frames = Vec::new();
    let started = std::time::Instant::now();

    for index in 0..tick_count {
        let now = Timestamp(index * tick_us);
        debug_assert_eq!(world.time, now);
        let window_end = now.0 + tick_us;
        let mut events = Vec::new();

        // Bed decision from the picture published before this tick.
        let mut bed_command = None;
        if let Some(b) = bed.as_mut() {
            let step = b.navigator.decide(&engine.picture(), now);
            let ev = match (&step.decision, step.bed.clone()) {
                (Decision::NoBedTrack, _) | (_, None) => TraceEvent::NoBedTrack { now },
                (Decision::Plan(t), Some(bed)) => TraceEvent::Plan {
                    now,
                    bed,
                    persons: step.persons.clone(),
                    trajectory: t.clone(),
                },
                (Decision::Stop { reason }, Some(bed)) => TraceEvent::Stop {
                    now,
                    bed,
                    persons: step.persons.clone(),
                    reason: reason.clone(),
                },
                (Decision::Yield(d), Some(bed)) => TraceEvent::Yield {
                    now,
                    bed,
                    persons: step.persons.clone(),
                    directive: *d,
                },
            };
            events.push(ev);
            bed_command = Some(step.command);
        }

        // Sensing and uplink.
        let outputs: Vec<Option<NodeOutput>> = if opts.concurrent {
            nodes
                .par_iter_mut()
                .map(|n| n.tick(&world))
                .collect::<Result<Vec<_>, _>>()?
        } else {
            nodes.iter_mut().map(|n| n.tick(&world)).collect::<Result<Vec<_>, _>>()?
        };
        let mut detections = Vec::new();
        let mut sent = Vec::new();
        for out in outputs.into_iter().flatten() {
            frames.push(out.transit.message.clone());
            sent.push(SendRecord {
                node_id: out.node_id,
                seq: out.seq,
                records: out.detections.len(),
                bytes: out.transit.message.len(),
                send_time: out.transit.send_time,
                delivery_time: out.transit.delivery_time,
                dropped: out.transit.dropped,
            });
            detections.extend(out.detections);
            uplink.push(out.node_id as u32, out.transit, out.reorder_allowed);
        }

        // Deliveries inside the window, at their exact times.
        let mut ingests = Vec::new();
        loop {
            let due = match (uplink.next_due(), downlink.next_due()) {
                (Some(a), Some(b)) => a.min(b),
                (a, b) => match a.or(b) {
                    Some(t) => t,
                    None => break,
                },
            };
            if due.0 >= window_end {
                break;
            }
            let batch = uplink.poll(due);
            if !batch.is_empty() {
                for d in batch {
                    let msg = decode(&d.message)?;
                    ingests.push(engine.ingest(&msg, d.delivered_at));
                }
                let picture = engine.picture();
                for ev in hazard.scan(&picture, due) {
                    events.push(TraceEvent::Conflict(ev));
                    for s in dispatcher.dispatch(&ev, due) {
                        frames.push(s.transit.message.clone());
                        events.push(TraceEvent::WarningSent {
                            event_id: s.event_id,
                            subscriber_id: s.subscriber_id,
                            send_time: s.transit.send_time,
                            delivery_time: s.transit.delivery_time,
                            dropped: s.transit.dropped,
                        });
                        let transit = InTransit {
                            message: s.event_id,
                            send_time: s.transit.send_time,
                            delivery_time: s.transit.delivery_time,
                            dropped: s.transit.dropped,
                        };
                        downlink.push(s.subscriber_id, transit, s.reorder_allowed);
                    }
                }
            }
            for d in downlink.poll(due) {
                events.push(TraceEvent::WarningDelivered {
                    event_id: d.message,
                    subscriber_id: d.sender,
                    delivered_at: d.delivered_at,
                });
            }
        }

        let covered = world
            .agents
            .iter()
            .filter(|a| a.class != AgentClass::StaticObstacle)
            .filter(|a| spec.nodes.iter().any(|n| visible(n, &world, a)))
            .map(|a| a.agent_id)
            .collect();

        ticks.push(TickRecord {
            index,
            time: now,
            agents: agent_records(&world),
            covered,
            detections,
            sent,
            ingests,
            picture: engine.picture(),
            events,
            bed_command,
        });

        world = step_world(&world, spec, dt);
        if let (Some(b), Some(cmd)) = (bed.as_mut(), bed_command) {
            let target_offset = cmd.target_offset.unwrap_or(b.state.d);
            let next = kinematic_step(b.state, cmd.target_speed, target_offset, &b.limits, dt);
            let lateral_rate = (next.d - b.state.d) / dt;
            let pose = b.planner.pose_of(&next, lateral_rate);
            let speed = (next.v * next.v + lateral_rate * lateral_rate).sqrt();
            b.state = next;
            if let Some(agent) = world.agent_mut(b.agent_id) {
                agent.set_motion(pose, speed);
            }
        }

        if opts.realtime {
            let target = Duration::from_micros(window_end);
            if let Some(wait) = target.checked_sub(started.elapsed()) {
                std::thread::sleep(wait);
            }
        }
    }

    Ok(SimOutput { header, ticks, frames })
}

/// Runs the scenario and writes `trace.ndjson`, `frames.camp` and
/// `metrics.json` into `out_dir`. Metrics are computed from the trace file
/// as written.
pub fn run(spec: &ScenarioSpec, seed: u64, out_dir: &Path, opts: &RunOptions) -> Result<RunOutput, HarnessError> {
    let sim = simulate(spec, seed, opts)?;
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io("create directory", out_dir, e))?;

    let trace_path = out_dir.join("trace.ndjson");
    write_trace_file(&trace_path, &sim.header, &sim.ticks)?;

    let capture_path = out_dir.join("frames.camp");
    let file = fs::File::create(&capture_path).map_err(|e| HarnessError::io("create", &capture_path, e))?;
    let mut cap = CaptureWriter::new(std::io::BufWriter::new(file));
    for f in &sim.frames {
        cap.write_frame(f).map_err(|e| HarnessError::io("write", &capture_path, e))?;
    }
    cap.finish().map_err(|e| HarnessError::io("write", &capture_path, e))?;

    let trace = read_trace_file(&trace_path)?;
    let metrics = compute_metrics(&trace);
    let metrics_path = out_dir.join("metrics.json");
    write_metrics(&metrics_path, &metrics)?;
    Ok(RunOutput {
        trace_path,
        metrics_path,
        capture_path,
        metrics,
    })
}

pub fn write_metrics(path: &Path, metrics: &RunMetrics) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(metrics).map_err(|e| HarnessError::Invalid(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| HarnessError::io("write", path, e))
}

impl From<TraceError> for HarnessError {
    fn from(e: TraceError) -> Self {
        HarnessError::Trace(e)
    }
}
