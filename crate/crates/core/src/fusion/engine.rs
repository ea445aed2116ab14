//! The cloud fusion engine: a single writer turning perception messages into
//! a global tracked picture.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::track::{associate, predict_track, update_track, Measurement, Track, TrackSnapshot, TrackStatus};
use super::FusionConfig;
use crate::geometry::{AgentClass, Timestamp};
use crate::netsim::PerceptionMessage;
use crate::sensor::SensorNodeConfig;
use crate::Vec2;

/// Confirmed and coasting tracks at `time`, ordered by track id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalPicture {
    pub time: Timestamp,
    pub tracks: Vec<TrackSnapshot>,
}

impl GlobalPicture {
    pub fn track(&self, id: u64) -> Option<&TrackSnapshot> {
        self.tracks.iter().find(|t| t.track_id == id)
    }
}

/// What one ingest changed, plus its latency accounting.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestOutcome {
    pub node_id: u16,
    pub seq: u32,
    pub capture_time: Timestamp,
    pub arrival_time: Timestamp,
    pub publish_time: Timestamp,
    pub records: usize,
    pub stale: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub updated: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spawned: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub confirmed: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coasting: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub removed: Vec<u64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionStats {
    pub ingested: u64,
    pub stale_discarded: u64,
    pub invalid_records: u64,
    pub filter_failures: u64,
    pub tracks_created: u64,
    pub tracks_removed: u64,
}

#[derive(Debug, Clone)]
pub struct FusionEngine {
    config: FusionConfig,
    nodes: BTreeMap<u16, SensorNodeConfig>,
    tracks: Vec<Track>,
    next_id: u64,
    clock: Timestamp,
    stats: FusionStats,
}

impl FusionEngine {
    /// `nodes` supplies coverage geometry: an unmatched track only accrues a
    /// miss from a message whose sender covers the track's position.
    pub fn new(config: FusionConfig, nodes: &[SensorNodeConfig]) -> Self {
        FusionEngine {
            config,
            nodes: nodes.iter().map(|n| (n.node_id, n.clone())).collect(),
            tracks: Vec::new(),
            next_id: 1,
            clock: Timestamp::ZERO,
            stats: FusionStats::default(),
        }
    }

    pub fn clock(&self) -> Timestamp {
        self.clock
    }

    pub fn stats(&self) -> FusionStats {
        self.stats
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn picture(&self) -> GlobalPicture {
        GlobalPicture {
            time: self.clock,
            tracks: self
                .tracks
                .iter()
                .filter(|t| t.status != TrackStatus::Tentative)
                .map(Track::snapshot)
                .collect(),
        }
    }

    pub fn ingest(&mut self, msg: &PerceptionMessage, arrival: Timestamp) -> IngestOutcome {
        let mut out = IngestOutcome {
            node_id: msg.node_id,
            seq: msg.seq,
            capture_time: msg.capture_time,
            arrival_time: arrival,
            publish_time: arrival,
            records: msg.records.len(),
            ..Default::default()
        };
        let window = crate::geometry::secs_to_micros(self.config.staleness_window_s);
        if msg.capture_time.0.saturating_add(window) < self.clock.0 {
            out.stale = true;
            self.stats.stale_discarded += 1;
            return out;
        }
        self.stats.ingested += 1;
        self.clock = self.clock.max(msg.capture_time);
        let t = msg.capture_time;

        // Expire first so a returning object starts a fresh track.
        let timeout = self.config.drop_timeout_s;
        let clock = self.clock;
        self.tracks.retain(|tr| {
            let expired = clock.secs_since(tr.last_update) > timeout;
            if expired {
                out.removed.push(tr.track_id);
            }
            !expired
        });

        let mut measurements = Vec::with_capacity(msg.records.len());
        for r in &msg.records {
            let Some(class) = AgentClass::from_code(r.class_code) else {
                self.stats.invalid_records += 1;
                continue;
            };
            let position = Vec2::new(r.x, r.y);
            let sigma = r.sigma as f64;
            if !position.is_finite() || !sigma.is_finite() || sigma < 0.0 {
                self.stats.invalid_records += 1;
                continue;
            }
            measurements.push(Measurement {
                node_id: msg.node_id,
                class,
                position,
                sigma,
                time: t,
            });
        }

        // Tracks newer than the message (late, but within the staleness
        // window) are not rewound: they are associated at their extrapolated
        // position and updated in place.
        let predicted: Vec<Track> = self
            .tracks
            .iter()
            .map(|tr| {
                if tr.last_update <= t {
                    predict_track(tr, t, self.config.accel_density).unwrap_or_else(|_| tr.clone())
                } else {
                    tr.clone()
                }
            })
            .collect();
        let positions: Vec<Vec2> = predicted.iter().map(|tr| tr.position_at(t)).collect();
        let det_positions: Vec<Vec2> = measurements.iter().map(|m| m.position).collect();
        let assignment = associate(&positions, &det_positions, self.config.gate_m);

        let mut matched = vec![false; self.tracks.len()];
        for &(ti, di) in &assignment.pairs {
            matched[ti] = true;
            let m = &measurements[di];
            match update_track(
                &predicted[ti],
                m,
                self.config.min_measurement_sigma_m,
                self.config.class_vote_window,
            ) {
                Ok(mut tr) => {
                    if tr.status != TrackStatus::Confirmed && tr.hit_count >= self.config.confirm_threshold {
                        tr.status = TrackStatus::Confirmed;
                        out.confirmed.push(tr.track_id);
                    }
                    out.updated.push(tr.track_id);
                    self.tracks[ti] = tr;
                }
                Err(e) => {
                    log::warn!("track {} update failed: {e}", self.tracks[ti].track_id);
                    self.stats.filter_failures += 1;
                }
            }
        }

        let sender = self.nodes.get(&msg.node_id);
        let mut doomed = Vec::new();
        for (i, tr) in self.tracks.iter_mut().enumerate() {
            if matched[i] || !sender.is_some_and(|n| n.covers(positions[i])) {
                continue;
            }
            tr.miss_count += 1;
            if tr.miss_count >= self.config.miss_threshold {
                match tr.status {
                    TrackStatus::Tentative => doomed.push(tr.track_id),
                    TrackStatus::Confirmed => {
                        tr.status = TrackStatus::Coasting;
                        out.coasting.push(tr.track_id);
                    }
                    TrackStatus::Coasting => {}
                }
            }
        }

        for &di in &assignment.unmatched_cols {
            let mut tr = Track::spawn(self.next_id, &measurements[di], self.config.initial_velocity_sigma_mps);
            self.next_id += 1;
            self.stats.tracks_created += 1;
            if tr.hit_count >= self.config.confirm_threshold {
                tr.status = TrackStatus::Confirmed;
                out.confirmed.push(tr.track_id);
            }
            out.spawned.push(tr.track_id);
            self.tracks.push(tr);
        }

        self.tracks.retain(|tr| {
            let drop = doomed.contains(&tr.track_id);
            if drop {
                out.removed.push(tr.track_id);
            }
            !drop
        });
        self.stats.tracks_removed += out.removed.len() as u64;
        out.removed.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netsim::ObjectRecord;
    use crate::Pose2;

    fn node(id: u16, x: f64) -> SensorNodeConfig {
        SensorNodeConfig {
            node_id: id,
            pose: Pose2 { x, y: 0.0, heading: 0.0 },
            mount_height_m: 4.0,
            fov_rad: std::f64::consts::TAU,
            max_range_m: 10.0,
            detection_period_s: 0.1,
            noise_sigma_m: 0.0,
            miss_rate: 0.0,
            class_accuracy: 1.0,
            link: "urllc".into(),
        }
    }

    fn msg(node: u16, seq: u32, t: u64, pts: &[(f64, f64)]) -> PerceptionMessage {
        PerceptionMessage {
            node_id: node,
            seq,
            capture_time: Timestamp(t),
            records: pts
                .iter()
                .map(|&(x, y)| ObjectRecord { class_code: 1, x, y, sigma: 0.0 })
                .collect(),
        }
    }

    #[test]
    fn clean_single_target_confirms_at_truth() {
        let mut e = FusionEngine::new(FusionConfig::default(), &[node(1, 0.0)]);
        for k in 0..5u32 {
            let t = k as u64 * 100_000;
            e.ingest(&msg(1, k, t, &[(1.0 + 0.1 * k as f64, 2.0)]), Timestamp(t + 1000));
        }
        let p = e.picture();
        assert_eq!(p.tracks.len(), 1);
        assert_eq!(p.tracks[0].status, TrackStatus::Confirmed);
        assert!(p.tracks[0].position.distance(Vec2::new(1.4, 2.0)) < 1e-6);
    }

    #[test]
    fn stale_messages_are_counted() {
        let mut e = FusionEngine::new(FusionConfig::default(), &[node(1, 0.0)]);
        e.ingest(&msg(1, 0, 1_000_000, &[(1.0, 1.0)]), Timestamp(1_001_000));
        let o = e.ingest(&msg(1, 1, 800_000, &[(1.0, 1.0)]), Timestamp(1_002_000));
        assert!(o.stale);
        assert_eq!(e.stats().stale_discarded, 1);
        assert_eq!(e.clock(), Timestamp(1_000_000));
        let o = e.ingest(&msg(1, 2, 900_000, &[(1.0, 1.0)]), Timestamp(1_003_000));
        assert!(!o.stale);
        assert_eq!(e.clock(), Timestamp(1_000_000));
    }

    #[test]
    fn missed_tracks_coast_then_time_out_and_ids_are_fresh() {
        let mut e = FusionEngine::new(FusionConfig::default(), &[node(1, 0.0)]);
        for k in 0..3u32 {
            e.ingest(&msg(1, k, k as u64 * 100_000, &[(1.0, 0.0)]), Timestamp::ZERO);
        }
        for k in 3..6u32 {
            e.ingest(&msg(1, k, k as u64 * 100_000, &[]), Timestamp::ZERO);
        }
        assert_eq!(e.picture().tracks[0].status, TrackStatus::Coasting);
        let o = e.ingest(&msg(1, 40, 2_300_000, &[(1.0, 0.0)]), Timestamp::ZERO);
        assert_eq!(o.removed, vec![1]);
        assert_eq!(o.spawned, vec![2]);
    }

    #[test]
    fn out_of_coverage_tracks_do_not_accrue_misses() {
        let mut e = FusionEngine::new(FusionConfig::default(), &[node(1, 0.0), node(2, 100.0)]);
        for k in 0..3u32 {
            e.ingest(&msg(1, k, k as u64 * 100_000, &[(1.0, 0.0)]), Timestamp::ZERO);
        }
        for k in 3..8u32 {
            e.ingest(&msg(2, k, 300_000, &[]), Timestamp::ZERO);
        }
        assert_eq!(e.picture().tracks[0].status, TrackStatus::Confirmed);
    }
}
