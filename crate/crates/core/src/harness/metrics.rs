//! Run metrics, computed only from a trace.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::trace::{AgentRecord, TickRecord, Trace, TraceEvent};
use crate::fusion::{gated_assignment, TrackStatus};
use crate::geometry::AgentClass;
use crate::Vec2;

/// Ground-truth conflict between a vehicle and another agent, with the
/// earliest warning mapped onto that pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConflictLead {
    pub agent_a: u32,
    pub agent_b: u32,
    pub min_gap_m: f64,
    /// Seconds from run start to the ground-truth minimum gap.
    pub instant_s: f64,
    /// Seconds from run start to the first event for the pair issued no
    /// later than the instant.
    pub first_warning_s: Option<f64>,
    pub lead_time_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub ticks: u64,
    pub localization_rmse: Option<f64>,
    pub localization_samples: u64,
    pub latency_p50_us: Option<u64>,
    pub latency_p99_us: Option<u64>,
    pub latency_samples: u64,
    pub id_switches: u64,
    pub duplicate_tracks: u64,
    pub track_continuity: f64,
    /// Distinct track ids that were ever Confirmed.
    pub confirmed_tracks: u64,
    pub min_person_clearance: Option<f64>,
    pub warning_lead_time: Option<f64>,
    pub unwarned_conflicts: u64,
    pub conflicts: Vec<ConflictLead>,
    pub messages_sent: u64,
    pub messages_lost: u64,
    pub stale_discarded: u64,
}

fn tracked(a: &AgentRecord) -> bool {
    a.class != AgentClass::StaticObstacle
}

fn pos(a: &AgentRecord) -> Vec2 {
    Vec2::new(a.x, a.y)
}

/// Nearest-rank percentile of a sorted, non-empty slice.
pub fn percentile(sorted: &[u64], p: f64) -> u64 {
    let rank = (p * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Per-tick gated matching of ground truth (rows) to picture tracks
/// extrapolated to the tick time (columns). Returns `(agent_id, track_id)`
/// pairs plus unmatched track ids lying within the gate of some agent.
fn match_tick(t: &TickRecord, gate: f64) -> (Vec<(u32, u64)>, Vec<u64>) {
    let agents: Vec<&AgentRecord> = t.agents.iter().filter(|a| tracked(a)).collect();
    let tracks = &t.picture.tracks;
    let positions: Vec<Vec2> = tracks.iter().map(|tr| tr.position_at(t.time)).collect();
    let costs: Vec<Vec<f64>> = agents
        .iter()
        .map(|a| positions.iter().map(|p| p.distance(pos(a))).collect())
        .collect();
    let assignment = gated_assignment(&costs, tracks.len(), gate);
    let pairs = assignment
        .pairs
        .iter()
        .map(|&(i, j)| (agents[i].agent_id, tracks[j].track_id))
        .collect();
    let dups = assignment
        .unmatched_cols
        .iter()
        .filter(|&&j| agents.iter().any(|a| positions[j].distance(pos(a)) <= gate))
        .map(|&j| tracks[j].track_id)
        .collect();
    (pairs, dups)
}

pub fn compute_metrics(trace: &Trace) -> RunMetrics {
    let gate = trace.header.match_gate_m;
    let radius = trace.header.conflict_radius_m;

    let gt_at: BTreeMap<u64, &TickRecord> = trace.ticks.iter().map(|t| (t.time.0, t)).collect();

    // Localization: each Confirmed track state is scored once, at the
    // instant it was updated, against ground truth at that instant.
    let mut seen = BTreeSet::new();
    let mut by_time: BTreeMap<u64, Vec<Vec2>> = BTreeMap::new();
    let mut confirmed_ids = BTreeSet::new();
    for t in &trace.ticks {
        for tr in &t.picture.tracks {
            if tr.status != TrackStatus::Confirmed {
                continue;
            }
            confirmed_ids.insert(tr.track_id);
            if seen.insert((tr.track_id, tr.last_update.0)) {
                by_time.entry(tr.last_update.0).or_default().push(tr.position);
            }
        }
    }
    let mut sq_sum = 0.0;
    let mut samples = 0u64;
    for (time, estimates) in &by_time {
        let Some(gt) = gt_at.get(time) else { continue };
        let truth: Vec<Vec2> = gt.agents.iter().filter(|a| tracked(a)).map(pos).collect();
        let costs: Vec<Vec<f64>> = estimates
            .iter()
            .map(|e| truth.iter().map(|g| e.distance(*g)).collect())
            .collect();
        let a = gated_assignment(&costs, truth.len(), gate);
        for (i, j) in a.pairs {
            let d = estimates[i].distance(truth[j]);
            sq_sum += d * d;
            samples += 1;
        }
    }

    // Identity, duplicates and continuity from per-tick matching.
    let mut last_track: BTreeMap<u32, u64> = BTreeMap::new();
    let mut id_switches = 0;
    let mut duplicates = BTreeSet::new();
    let (mut covered_ticks, mut matched_ticks) = (0u64, 0u64);
    let mut track_agent: Vec<BTreeMap<u64, u32>> = Vec::with_capacity(trace.ticks.len());
    for t in &trace.ticks {
        let (pairs, dups) = match_tick(t, gate);
        duplicates.extend(dups);
        let mut map = BTreeMap::new();
        for &(agent, track) in &pairs {
            if let Some(prev) = last_track.insert(agent, track) {
                if prev != track {
                    id_switches += 1;
                }
            }
            map.insert(track, agent);
        }
        for agent in &t.covered {
            covered_ticks += 1;
            if pairs.iter().any(|(a, _)| a == agent) {
                matched_ticks += 1;
            }
        }
        track_agent.push(map);
    }

    // Latency over fused detections.
    let mut latencies = Vec::new();
    let mut stale = 0;
    for t in &trace.ticks {
        for ing in &t.ingests {
            if ing.stale {
                stale += 1;
                continue;
            }
            let l = ing.publish_time.0.saturating_sub(ing.capture_time.0);
            latencies.extend(std::iter::repeat_n(l, ing.records));
        }
    }
    latencies.sort_unstable();

    // Indoor clearance between beds and pedestrians.
    let mut min_clearance: Option<f64> = None;
    for t in &trace.ticks {
        for bed in t.agents.iter().filter(|a| a.class == AgentClass::MedicalBed) {
            for p in t.agents.iter().filter(|a| a.class == AgentClass::Pedestrian) {
                let d = pos(bed).distance(pos(p));
                min_clearance = Some(min_clearance.map_or(d, |m| m.min(d)));
            }
        }
    }

    // Warning lead against ground-truth conflicts.
    let mut gaps: BTreeMap<(u32, u32), (f64, u64)> = BTreeMap::new();
    for t in &trace.ticks {
        let agents: Vec<&AgentRecord> = t.agents.iter().filter(|a| tracked(a)).collect();
        for (i, a) in agents.iter().enumerate() {
            for b in &agents[i + 1..] {
                if a.class != AgentClass::Vehicle && b.class != AgentClass::Vehicle {
                    continue;
                }
                let key = (a.agent_id.min(b.agent_id), a.agent_id.max(b.agent_id));
                let d = pos(a).distance(pos(b));
                let e = gaps.entry(key).or_insert((d, t.time.0));
                if d < e.0 {
                    *e = (d, t.time.0);
                }
            }
        }
    }
    let mut first_event: BTreeMap<(u32, u32), Vec<u64>> = BTreeMap::new();
    for (k, t) in trace.ticks.iter().enumerate() {
        for ev in &t.events {
            if let TraceEvent::Conflict(c) = ev {
                let map = &track_agent[k];
                if let (Some(&a), Some(&b)) = (map.get(&c.track_a), map.get(&c.track_b)) {
                    first_event.entry((a.min(b), a.max(b))).or_default().push(c.issued_at.0);
                }
            }
        }
    }
    let mut conflicts = Vec::new();
    for (&(a, b), &(gap, at)) in &gaps {
        if !(gap < radius) {
            continue;
        }
        let first = first_event
            .get(&(a, b))
            .and_then(|v| v.iter().copied().filter(|&t| t <= at).min());
        conflicts.push(ConflictLead {
            agent_a: a,
            agent_b: b,
            min_gap_m: gap,
            instant_s: at as f64 * 1e-6,
            first_warning_s: first.map(|t| t as f64 * 1e-6),
            lead_time_s: first.map(|t| (at - t) as f64 * 1e-6),
        });
    }
    let warning_lead_time = conflicts
        .iter()
        .filter_map(|c| c.lead_time_s)
        .fold(None, |m: Option<f64>, l| Some(m.map_or(l, |m| m.min(l))));
    let unwarned = conflicts.iter().filter(|c| c.lead_time_s.is_none()).count() as u64;

    let mut sent = 0;
    let mut lost = 0;
    for t in &trace.ticks {
        sent += t.sent.len() as u64;
        lost += t.sent.iter().filter(|s| s.dropped).count() as u64;
        for ev in &t.events {
            if let TraceEvent::WarningSent { dropped, .. } = ev {
                sent += 1;
                lost += *dropped as u64;
            }
        }
    }

    RunMetrics {
        ticks: trace.ticks.len() as u64,
        localization_rmse: (samples > 0).then(|| (sq_sum / samples as f64).sqrt()),
        localization_samples: samples,
        latency_p50_us: (!latencies.is_empty()).then(|| percentile(&latencies, 0.50)),
        latency_p99_us: (!latencies.is_empty()).then(|| percentile(&latencies, 0.99)),
        latency_samples: latencies.len() as u64,
        id_switches,
        duplicate_tracks: duplicates.len() as u64,
        track_continuity: if covered_ticks == 0 {
            1.0
        } else {
            matched_ticks as f64 / covered_ticks as f64
        },
        confirmed_tracks: confirmed_ids.len() as u64,
        min_person_clearance: min_clearance,
        warning_lead_time,
        unwarned_conflicts: unwarned,
        conflicts,
        messages_sent: sent,
        messages_lost: lost,
        stale_discarded: stale,
    }
}
