//! Conflict prediction between tracked road users and warning dispatch.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::fusion::{GlobalPicture, TrackSnapshot, TrackStatus};
use crate::geometry::{self, secs_to_micros, AgentClass, Timestamp};
use crate::netsim::{encode_warning, InTransit, LinkProfile, WarningMessage};
use crate::num::Real;
use crate::rng::{stream, Domain, Stream};
use crate::scenario::FieldError;


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HazardConfig {
    pub conflict_radius_m: f64,
    pub horizon_s: f64,
    pub re_alert_delta_s: f64,
    /// Lead time a warning should have over the conflict instant.
    pub warn_lead_s: f64,
}

impl Default for HazardConfig {
    fn default() -> Self {
        HazardConfig {
            conflict_radius_m: 2.0,
            horizon_s: 6.0,
            re_alert_delta_s: 1.0,
            warn_lead_s: 2.0,
        }
    }
}

impl HazardConfig {
    pub fn validate(&self) -> Result<(), FieldError> {
        for (v, name) in [
            (self.conflict_radius_m, "conflict_radius_m"),
            (self.horizon_s, "horizon_s"),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(FieldError::new(name, "must be positive"));
            }
        }
        for (v, name) in [(self.re_alert_delta_s, "re_alert_delta_s"), (self.warn_lead_s, "warn_lead_s")] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(FieldError::new(name, "must be non-negative"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubscriberKind {
    ConnectedVehicle,
    PhoneApp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubscriberConfig {
    pub subscriber_id: u32,
    pub kind: SubscriberKind,
    /// Name of the downlink profile.
    pub link: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConflictEvent {
    pub event_id: u64,
    pub track_a: u64,
    pub track_b: u64,
    /// Seconds until the pair first comes within the conflict radius.
    pub time_to_conflict: f64,
    pub min_distance: f64,
    /// Seconds from issue to closest approach.
    pub time_of_closest_approach: f64,
    pub issued_at: Timestamp,
}

impl ConflictEvent {
    pub fn warning(&self) -> WarningMessage {
        WarningMessage {
            event_id: self.event_id,
            track_a: self.track_a,
            track_b: self.track_b,
            time_to_conflict: self.time_to_conflict,
            min_distance: self.min_distance,
            issued_at: self.issued_at,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestApproach<T> {
    pub t_star: T,
    pub min_distance: T,
}

/// Closest approach of two constant-velocity points from relative position
/// and velocity, restricted to `t ≥ 0`.
pub fn closest_approach<T: Real>(rel_pos: geometry::Vec2<T>, rel_vel: geometry::Vec2<T>) -> ClosestApproach<T> {
    let vv = rel_vel.norm_sq();
    let t_star = if vv > T::zero() {
        (-rel_pos.dot(rel_vel) / vv).max(T::zero())
    } else {
        T::zero()
    };
    ClosestApproach {
        t_star,
        min_distance: (rel_pos + rel_vel * t_star).norm(),
    }
}

/// First `t ≥ 0` at which the relative distance is at most `radius`.
pub fn entry_time<T: Real>(rel_pos: geometry::Vec2<T>, rel_vel: geometry::Vec2<T>, radius: T) -> Option<T> {
    let c = rel_pos.norm_sq() - radius * radius;
    if c <= T::zero() {
        return Some(T::zero());
    }
    let a = rel_vel.norm_sq();
    let b = rel_pos.dot(rel_vel);
    if a == T::zero() || b >= T::zero() {
        return None;
    }
    let disc = b * b - a * c;
    if disc < T::zero() {
        return None;
    }
    // root of a t² + 2 b t + c = 0 nearest zero, in the cancellation-free form
    Some(c / (-b + disc.sqrt()))
}

/// Constant-velocity conflict test between two tracks, both extrapolated to
/// `now`. Returns an event (with `event_id` 0) iff the closest approach lies
/// within `horizon` seconds and is closer than `radius`.
pub fn predict_conflict(
    a: &TrackSnapshot,
    b: &TrackSnapshot,
    now: Timestamp,
    horizon: f64,
    radius: f64,
) -> Option<ConflictEvent> {
    let rel_pos = b.position_at(now) - a.position_at(now);
    let rel_vel = b.velocity - a.velocity;
    let ca = closest_approach(rel_pos, rel_vel);
    if ca.t_star > horizon || !(ca.min_distance < radius) {
        return None;
    }
    let ttc = entry_time(rel_pos, rel_vel, radius).unwrap_or(ca.t_star);
    Some(ConflictEvent {
        event_id: 0,
        track_a: a.track_id,
        track_b: b.track_id,
        time_to_conflict: ttc.min(ca.t_star),
        min_distance: ca.min_distance,
        time_of_closest_approach: ca.t_star,
        issued_at: now,
    })
}

/// Pairwise scanner with a per-pair dedup table.
#[derive(Debug, Clone)]
pub struct HazardMonitor {
    config: HazardConfig,
    /// Absolute closest-approach instant of the last event per pair.
    alerted: BTreeMap<(u64, u64), Timestamp>,
    next_event_id: u64,
}

impl HazardMonitor {
    pub fn new(config: HazardConfig) -> Self {
        HazardMonitor {
            config,
            alerted: BTreeMap::new(),
            next_event_id: 1,
        }
    }

    pub fn config(&self) -> &HazardConfig {
        &self.config
    }

    pub fn scan(&mut self, picture: &GlobalPicture, now: Timestamp) -> Vec<ConflictEvent> {
        self.alerted.retain(|_, at| *at >= now);
        let confirmed: Vec<&TrackSnapshot> = picture
            .tracks
            .iter()
            .filter(|t| t.status == TrackStatus::Confirmed && t.class != AgentClass::StaticObstacle)
            .collect();
        let delta = secs_to_micros(self.config.re_alert_delta_s);
        let mut events = Vec::new();
        for (i, a) in confirmed.iter().enumerate() {
            for b in &confirmed[i + 1..] {
                if a.class != AgentClass::Vehicle && b.class != AgentClass::Vehicle {
                    continue;
                }
                let Some(mut ev) = predict_conflict(a, b, now, self.config.horizon_s, self.config.conflict_radius_m)
                else {
                    continue;
                };
                let key = (a.track_id.min(b.track_id), a.track_id.max(b.track_id));
                let at = now.plus_micros(secs_to_micros(ev.time_of_closest_approach));
                if let Some(prev) = self.alerted.get(&key) {
                    if prev.0.abs_diff(at.0) <= delta {
                        continue;
                    }
                }
                self.alerted.insert(key, at);
                ev.event_id = self.next_event_id;
                self.next_event_id += 1;
                events.push(ev);
            }
        }
        events
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarningSend {
    pub event_id: u64,
    pub subscriber_id: u32,
    pub transit: InTransit<Vec<u8>>,
    pub reorder_allowed: bool,
}

/// Sends warning frames to subscribers, each over its own link and stream.
#[derive(Debug, Clone)]
pub struct Dispatcher {
    subscribers: Vec<(SubscriberConfig, LinkProfile, Stream)>,
}

impl Dispatcher {
    /// Subscribers whose link is unknown are skipped (the scenario validator
    /// rejects such files).
    pub fn new(subscribers: &[SubscriberConfig], links: &[LinkProfile], seed: u64) -> Self {
        Dispatcher {
            subscribers: subscribers
                .iter()
                .filter_map(|s| {
                    let link = links.iter().find(|l| l.name == s.link)?.clone();
                    Some((s.clone(), link, stream(seed, Domain::Downlink, s.subscriber_id as u64)))
                })
                .collect(),
        }
    }

    pub fn dispatch(&mut self, event: &ConflictEvent, now: Timestamp) -> Vec<WarningSend> {
        let frame = encode_warning(&event.warning());
        self.subscribers
            .iter_mut()
            .map(|(s, link, rng)| WarningSend {
                event_id: event.event_id,
                subscriber_id: s.subscriber_id,
                transit: link.send(frame.clone(), now, rng),
                reorder_allowed: link.reorder_allowed,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::kalman::identity;
    use crate::Vec2;

    pub(crate) fn snap(id: u64, class: AgentClass, p: (f64, f64), v: (f64, f64)) -> TrackSnapshot {
        TrackSnapshot {
            track_id: id,
            class,
            status: TrackStatus::Confirmed,
            position: Vec2::new(p.0, p.1),
            velocity: Vec2::new(v.0, v.1),
            covariance: identity(),
            last_update: Timestamp::ZERO,
            hit_count: 3,
            miss_count: 0,
            contributing_nodes: vec![1],
        }
    }

    #[test]
    fn head_on_entry_time() {
        let a = snap(1, AgentClass::Vehicle, (0.0, 0.0), (10.0, 0.0));
        let b = snap(2, AgentClass::Pedestrian, (100.0, 0.0), (0.0, 0.0));
        let e = predict_conflict(&a, &b, Timestamp::ZERO, 12.0, 2.0).unwrap();
        assert!((e.time_to_conflict - 9.8).abs() < 1e-12);
        assert!((e.time_of_closest_approach - 10.0).abs() < 1e-12);
        assert!(e.min_distance < 1e-12);
        assert!(predict_conflict(&a, &b, Timestamp::ZERO, 6.0, 2.0).is_none());
    }

    #[test]
    fn parallel_and_near_miss() {
        let a = snap(1, AgentClass::Vehicle, (0.0, 0.0), (5.0, 0.0));
        let b = snap(2, AgentClass::Vehicle, (0.0, 10.0), (5.0, 0.0));
        assert!(predict_conflict(&a, &b, Timestamp::ZERO, 6.0, 2.0).is_none());
        // b crosses a's path 5 m to the side of the closest point
        let a = snap(1, AgentClass::Vehicle, (-10.0, 0.0), (10.0, 0.0));
        let b = snap(2, AgentClass::Pedestrian, (0.0, -10.0 + 5.0 * 2f64.sqrt()), (0.0, 10.0));
        let rel = b.position - a.position;
        let ca = closest_approach(rel, b.velocity - a.velocity);
        assert!((ca.min_distance - 5.0).abs() < 1e-9);
        assert!(predict_conflict(&a, &b, Timestamp::ZERO, 6.0, 2.0).is_none());
    }

    #[test]
    fn scan_dedups_and_needs_a_vehicle() {
        let mut m = HazardMonitor::new(HazardConfig::default());
        let empty = GlobalPicture { time: Timestamp::ZERO, tracks: vec![] };
        assert!(m.scan(&empty, Timestamp::ZERO).is_empty());
        let pic = GlobalPicture {
            time: Timestamp::ZERO,
            tracks: vec![
                snap(1, AgentClass::Vehicle, (0.0, 0.0), (10.0, 0.0)),
                snap(2, AgentClass::Pedestrian, (30.0, 0.0), (0.0, 0.0)),
                snap(3, AgentClass::Pedestrian, (30.0, 0.5), (0.0, 0.0)),
            ],
        };
        let ev = m.scan(&pic, Timestamp::ZERO);
        assert_eq!(ev.len(), 2);
        assert_eq!((ev[0].event_id, ev[1].event_id), (1, 2));
        assert!(m.scan(&pic, Timestamp::ZERO).is_empty());
    }

    #[test]
    fn dispatch_to_subscribers() {
        let ev = ConflictEvent {
            event_id: 1,
            track_a: 1,
            track_b: 2,
            time_to_conflict: 3.0,
            min_distance: 0.5,
            time_of_closest_approach: 3.2,
            issued_at: Timestamp(1_000_000),
        };
        let mut none = Dispatcher::new(&[], &[LinkProfile::urllc()], 1);
        assert!(none.dispatch(&ev, Timestamp(1_000_000)).is_empty());

        let subs = [
            SubscriberConfig { subscriber_id: 1, kind: SubscriberKind::ConnectedVehicle, link: "urllc".into() },
            SubscriberConfig { subscriber_id: 2, kind: SubscriberKind::PhoneApp, link: "urllc".into() },
        ];
        let mut d = Dispatcher::new(&subs, &[LinkProfile::urllc()], 1);
        let sends = d.dispatch(&ev, Timestamp(1_000_000));
        assert_eq!(sends.len(), 2);
        for s in &sends {
            assert!((800..=1200).contains(&s.transit.latency_us()));
        }
        let lossy = LinkProfile::new("lossy", 1000, 0, 1.0, true);
        let subs = [SubscriberConfig { subscriber_id: 3, kind: SubscriberKind::PhoneApp, link: "lossy".into() }];
        let mut d = Dispatcher::new(&subs, &[lossy], 1);
        assert!(d.dispatch(&ev, Timestamp(0))[0].transit.dropped);
    }
}
