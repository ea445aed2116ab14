//! Tracks and the per-track predict/associate/update steps.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::assignment::{gated_assignment, Assignment};
use super::kalman::{self, FilterError, Mat4};
use crate::geometry::{AgentClass, Timestamp};
use crate::{CvState, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrackStatus {
    Tentative,
    Confirmed,
    Coasting,
}

/// One fused position measurement, as consumed by `update_track`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub node_id: u16,
    pub class: AgentClass,
    pub position: Vec2,
    pub sigma: f64,
    pub time: Timestamp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub track_id: u64,
    pub class: AgentClass,
    /// Filter state valid at `last_update`.
    pub filter: CvState,
    pub last_update: Timestamp,
    pub status: TrackStatus,
    pub hit_count: u32,
    pub miss_count: u32,
    pub contributing_nodes: BTreeSet<u16>,
    class_votes: VecDeque<AgentClass>,
}

impl Track {
    pub fn spawn(track_id: u64, m: &Measurement, velocity_sigma: f64) -> Track {
        Track {
            track_id,
            class: m.class,
            filter: CvState::from_position(m.position, m.sigma, velocity_sigma),
            last_update: m.time,
            status: TrackStatus::Tentative,
            hit_count: 1,
            miss_count: 0,
            contributing_nodes: BTreeSet::from([m.node_id]),
            class_votes: VecDeque::from([m.class]),
        }
    }

    pub fn position(&self) -> Vec2 {
        self.filter.position()
    }

    pub fn velocity(&self) -> Vec2 {
        self.filter.velocity()
    }

    /// Mean position extrapolated to `t` (either direction), without
    /// touching the covariance.
    pub fn position_at(&self, t: Timestamp) -> Vec2 {
        self.position() + self.velocity() * signed_secs(t, self.last_update)
    }

    pub fn snapshot(&self) -> TrackSnapshot {
        TrackSnapshot {
            track_id: self.track_id,
            class: self.class,
            status: self.status,
            position: self.position(),
            velocity: self.velocity(),
            covariance: self.filter.cov,
            last_update: self.last_update,
            hit_count: self.hit_count,
            miss_count: self.miss_count,
            contributing_nodes: self.contributing_nodes.iter().copied().collect(),
        }
    }

    fn vote(&mut self, class: AgentClass, window: usize) {
        self.class_votes.push_back(class);
        while self.class_votes.len() > window.max(1) {
            self.class_votes.pop_front();
        }
        let mut counts = [0usize; 4];
        for c in &self.class_votes {
            counts[c.code() as usize] += 1;
        }
        let best = *counts.iter().max().expect("non-empty");
        if counts[self.class.code() as usize] < best {
            let winners: Vec<usize> = (0..4).filter(|&i| counts[i] == best).collect();
            if winners.len() == 1 {
                self.class = AgentClass::from_code(winners[0] as u8).expect("valid code");
            }
        }
    }
}

pub fn signed_secs(t: Timestamp, from: Timestamp) -> f64 {
    (t.0 as i128 - from.0 as i128) as f64 * 1e-6
}

/// Immutable copy of a track handed to consumers and written to traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackSnapshot {
    pub track_id: u64,
    pub class: AgentClass,
    pub status: TrackStatus,
    pub position: Vec2,
    pub velocity: Vec2,
    pub covariance: Mat4<f64>,
    pub last_update: Timestamp,
    pub hit_count: u32,
    pub miss_count: u32,
    pub contributing_nodes: Vec<u16>,
}

impl TrackSnapshot {
    /// Constant-velocity extrapolation of the mean to `t`.
    pub fn position_at(&self, t: Timestamp) -> Vec2 {
        self.position + self.velocity * signed_secs(t, self.last_update)
    }
}

/// Constant-velocity propagation of a track to `to_time`.
pub fn predict_track(track: &Track, to_time: Timestamp, accel_density: f64) -> Result<Track, FilterError> {
    let dt = signed_secs(to_time, track.last_update);
    let filter = kalman::predict(&track.filter, dt, accel_density)?;
    Ok(Track {
        filter,
        last_update: to_time,
        ..track.clone()
    })
}

/// Optimal Euclidean assignment of predicted track positions to detections.
pub fn associate(tracks: &[Vec2], detections: &[Vec2], gate: f64) -> Assignment<f64> {
    let costs: Vec<Vec<f64>> = tracks
        .iter()
        .map(|t| detections.iter().map(|d| t.distance(*d)).collect())
        .collect();
    gated_assignment(&costs, detections.len(), gate)
}

/// Measurement update of an already-predicted track. Sigma is floored at
/// `min_sigma` so noiseless detectors keep the covariance invertible.
pub fn update_track(track: &Track, m: &Measurement, min_sigma: f64, vote_window: usize) -> Result<Track, FilterError> {
    let filter = kalman::update(&track.filter, m.position, m.sigma.max(min_sigma))?;
    let mut next = track.clone();
    next.filter = filter;
    next.last_update = next.last_update.max(m.time);
    next.hit_count += 1;
    next.miss_count = 0;
    next.contributing_nodes.insert(m.node_id);
    next.vote(m.class, vote_window);
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meas(x: f64, y: f64, t: u64) -> Measurement {
        Measurement {
            node_id: 1,
            class: AgentClass::Pedestrian,
            position: Vec2::new(x, y),
            sigma: 0.1,
            time: Timestamp(t),
        }
    }

    #[test]
    fn predict_moves_mean() {
        let mut t = Track::spawn(1, &meas(0.0, 0.0, 0), 1.0);
        t.filter.mean[2] = 2.0;
        let p = predict_track(&t, Timestamp(500_000), 0.0).unwrap();
        assert_eq!(p.position(), Vec2::new(1.0, 0.0));
        assert_eq!(p.last_update, Timestamp(500_000));
        assert!(predict_track(&p, Timestamp(0), 0.5).is_err());
    }

    #[test]
    fn association_examples() {
        let a = associate(&[], &[Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)], 2.0);
        assert_eq!(a.unmatched_cols, vec![0, 1]);
        let a = associate(
            &[Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0)],
            &[Vec2::new(0.5, 0.0), Vec2::new(9.5, 0.0)],
            2.0,
        );
        assert_eq!(a.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(a.total_cost, 1.0);
    }

    #[test]
    fn update_bookkeeping_and_class_vote() {
        let t = Track::spawn(1, &meas(0.0, 0.0, 0), 1.0);
        let mut m = meas(0.1, 0.0, 100_000);
        m.node_id = 2;
        m.class = AgentClass::Vehicle;
        let u = update_track(&predict_track(&t, m.time, 0.5).unwrap(), &m, 1e-6, 10).unwrap();
        assert_eq!(u.hit_count, 2);
        assert_eq!(u.contributing_nodes.iter().copied().collect::<Vec<_>>(), vec![1, 2]);
        // one vote each: tie keeps the prior class
        assert_eq!(u.class, AgentClass::Pedestrian);
        let u = update_track(&u, &m, 1e-6, 10).unwrap();
        assert_eq!(u.class, AgentClass::Vehicle);
    }
}
