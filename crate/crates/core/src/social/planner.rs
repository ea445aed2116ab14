//! Exhaustive lattice planner over (lateral offset, target speed) pairs
//! relative to the reference path.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::proxemics::PersonalSpace;
use super::PlannerConfig;
use crate::fusion::TrackSnapshot;
use crate::geometry::Timestamp;
use crate::{Polygon, Polyline, Pose2, Vec2};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("bed position ({x:.3}, {y:.3}) is outside the operating boundary")]
    OutsideBoundary { x: f64, y: f64 },
    #[error("boundary or reference path is degenerate")]
    Geometry,
}

/// Bed motion in path coordinates: arc length, signed lateral offset
/// (left positive) and longitudinal speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathState {
    pub s: f64,
    pub d: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub max_speed: f64,
    pub max_accel: f64,
    pub max_lateral_speed: f64,
}

/// One rate-limited control step; shared by the planner's rollouts and the
/// simulated bed, so plans and motion obey the same kinematics.
pub fn kinematic_step(state: PathState, target_speed: f64, target_offset: f64, limits: &Limits, dt: f64) -> PathState {
    let dv = (target_speed - state.v).clamp(-limits.max_accel * dt, limits.max_accel * dt);
    let v = (state.v + dv).clamp(0.0, limits.max_speed);
    let step = limits.max_lateral_speed * dt;
    let d = state.d + (target_offset - state.d).clamp(-step, step);
    PathState { s: state.s + v * dt, d, v }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    /// Seconds after the planning instant.
    pub t: f64,
    pub pose: Pose2,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rejection {
    Boundary,
    HardDisk,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateEval {
    pub offset: f64,
    pub speed: f64,
    pub rejected: Option<Rejection>,
    pub social: f64,
    pub path: f64,
    pub speed_term: f64,
    pub cost: f64,
    /// Smallest centre distance to any person over the rollout.
    pub min_clearance: f64,
    pub waypoints: Vec<TrajectoryPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedTrajectory {
    pub waypoints: Vec<TrajectoryPoint>,
    pub chosen_cost: f64,
    pub lateral_offset: f64,
    pub target_speed: f64,
    /// `None` when no person is present.
    pub min_clearance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    AllRejected,
    CostAboveThreshold,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanOutcome {
    Trajectory(PlannedTrajectory),
    Stop { reason: StopReason, best_cost: Option<f64> },
}

#[derive(Debug, Clone)]
pub struct Planner {
    config: PlannerConfig,
    boundary: Polygon,
    path: Polyline,
}

impl Planner {
    pub fn new(config: PlannerConfig, boundary: &[Vec2], reference_path: &[Vec2]) -> Result<Self, PlanError> {
        Ok(Planner {
            config,
            boundary: Polygon::new(boundary).ok_or(PlanError::Geometry)?,
            path: Polyline::new(reference_path).ok_or(PlanError::Geometry)?,
        })
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    pub fn path(&self) -> &Polyline {
        &self.path
    }

    pub fn boundary(&self) -> &Polygon {
        &self.boundary
    }

    pub fn limits(&self) -> Limits {
        Limits {
            max_speed: self.config.max_speed_mps,
            max_accel: self.config.max_accel_mps2,
            max_lateral_speed: self.config.max_lateral_speed_mps,
        }
    }

    /// Lattice in enumeration order: offsets outer, speeds inner.
    pub fn lattice(&self) -> Vec<(f64, f64)> {
        let c = &self.config;
        let offsets: Vec<f64> = if c.lateral_samples == 1 {
            vec![0.0]
        } else {
            (0..c.lateral_samples)
                .map(|i| -c.max_lateral_offset_m + 2.0 * c.max_lateral_offset_m * i as f64 / (c.lateral_samples - 1) as f64)
                .collect()
        };
        let speeds: Vec<f64> = (1..=c.speed_samples)
            .map(|k| c.max_speed_mps * k as f64 / c.speed_samples as f64)
            .collect();
        offsets
            .iter()
            .flat_map(|&o| speeds.iter().map(move |&v| (o, v)))
            .collect()
    }

    /// Largest lattice offset on the side of `sign` whose point at arc
    /// length `s` keeps the boundary margin; 0 if none does.
    pub fn edge_offset(&self, s: f64, sign: f64) -> f64 {
        let c = &self.config;
        let (p, tangent) = self.path.sample(s);
        let mut offsets: Vec<f64> = self
            .lattice()
            .into_iter()
            .map(|(o, _)| o)
            .filter(|o| o * sign > 0.0)
            .collect();
        offsets.dedup();
        offsets.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
        offsets
            .into_iter()
            .find(|&o| {
                let q = p + tangent.perp() * o;
                self.boundary.contains(q) && self.boundary.edge_distance(q) >= c.boundary_margin_m
            })
            .unwrap_or(0.0)
    }

    /// Path coordinates of a point plus a heading along the path.
    pub fn pose_of(&self, state: &PathState, lateral_rate: f64) -> Pose2 {
        let (p, tangent) = self.path.sample(state.s);
        let normal = tangent.perp();
        let q = p + normal * state.d;
        let motion = tangent * state.v + normal * lateral_rate;
        let heading = if motion.norm_sq() > 1e-18 { motion.angle() } else { tangent.angle() };
        Pose2 { x: q.x, y: q.y, heading }
    }

    /// Bed start state from its fused track extrapolated to `now`.
    pub fn start_state(&self, bed: &TrackSnapshot, now: Timestamp) -> Result<PathState, PlanError> {
        let p = bed.position_at(now);
        if !self.boundary.contains(p) {
            return Err(PlanError::OutsideBoundary { x: p.x, y: p.y });
        }
        let (s, d) = self.path.project(p);
        let (_, tangent) = self.path.sample(s);
        let v = bed.velocity.dot(tangent).clamp(0.0, self.config.max_speed_mps);
        Ok(PathState { s, d, v })
    }

    pub fn person_space(&self, person: &TrackSnapshot, at: Timestamp, ahead_s: f64) -> PersonalSpace<f64> {
        let c = &self.config;
        // Below the stationary threshold the velocity is treated as noise:
        // the space neither moves nor gains a heading.
        let moving = person.velocity.norm() >= c.stationary_speed_mps;
        let drift = if moving { person.velocity * ahead_s } else { Vec2::new(0.0, 0.0) };
        let center = person.position_at(at) + drift;
        let heading = moving.then(|| person.velocity.angle());
        PersonalSpace {
            center,
            heading,
            sigma_front: c.sigma_front_m,
            sigma_side: c.sigma_side_m,
            sigma_back: c.sigma_back_m,
        }
    }

    pub fn evaluate_candidate(
        &self,
        start: &PathState,
        persons: &[TrackSnapshot],
        now: Timestamp,
        offset: f64,
        speed: f64,
    ) -> CandidateEval {
        let c = &self.config;
        let limits = self.limits();
        let steps = (c.horizon_s / c.step_s).round().max(1.0) as usize;
        let mut state = *start;
        let mut waypoints = Vec::with_capacity(steps + 1);
        waypoints.push(TrajectoryPoint {
            t: 0.0,
            pose: self.pose_of(&state, 0.0),
            speed: state.v,
        });
        let mut rejected = None;
        let mut social: f64 = 0.0;
        let mut path_sum = 0.0;
        let mut min_clearance = f64::INFINITY;
        for k in 1..=steps {
            let t = k as f64 * c.step_s;
            let next = kinematic_step(state, speed, offset, &limits, c.step_s);
            let lateral_rate = (next.d - state.d) / c.step_s;
            state = next;
            let pose = self.pose_of(&state, lateral_rate);
            let p = pose.position();
            waypoints.push(TrajectoryPoint {
                t,
                pose,
                speed: (state.v * state.v + lateral_rate * lateral_rate).sqrt(),
            });
            if rejected.is_none() && (!self.boundary.contains(p) || self.boundary.edge_distance(p) < c.boundary_margin_m) {
                rejected = Some(Rejection::Boundary);
            }
            for person in persons {
                let space = self.person_space(person, now, t);
                let dist = p.distance(space.center);
                min_clearance = min_clearance.min(dist);
                if dist < c.r_hard_m && rejected.is_none() {
                    rejected = Some(Rejection::HardDisk);
                }
                social = social.max(space.cost(p));
            }
            path_sum += state.d * state.d;
        }
        let path = path_sum / steps as f64;
        let speed_term = ((c.max_speed_mps - speed) / c.max_speed_mps).powi(2);
        let cost = c.w_social * social + c.w_path * path + c.w_speed * speed_term;
        CandidateEval {
            offset,
            speed,
            rejected,
            social,
            path,
            speed_term,
            cost,
            min_clearance,
            waypoints,
        }
    }

    pub fn evaluate_all(
        &self,
        bed: &TrackSnapshot,
        persons: &[TrackSnapshot],
        now: Timestamp,
    ) -> Result<Vec<CandidateEval>, PlanError> {
        let start = self.start_state(bed, now)?;
        Ok(self
            .lattice()
            .into_iter()
            .map(|(o, v)| self.evaluate_candidate(&start, persons, now, o, v))
            .collect())
    }

    /// Minimum-cost admissible candidate, or Stop.
    pub fn plan(&self, bed: &TrackSnapshot, persons: &[TrackSnapshot], now: Timestamp) -> Result<PlanOutcome, PlanError> {
        let evals = self.evaluate_all(bed, persons, now)?;
        let mut best: Option<CandidateEval> = None;
        for e in evals {
            if e.rejected.is_some() {
                continue;
            }
            if best.as_ref().is_none_or(|b| e.cost < b.cost) {
                best = Some(e);
            }
        }
        Ok(match best {
            None => PlanOutcome::Stop {
                reason: StopReason::AllRejected,
                best_cost: None,
            },
            Some(b) if b.cost > self.config.stop_cost_threshold => PlanOutcome::Stop {
                reason: StopReason::CostAboveThreshold,
                best_cost: Some(b.cost),
            },
            Some(b) => PlanOutcome::Trajectory(PlannedTrajectory {
                waypoints: b.waypoints,
                chosen_cost: b.cost,
                lateral_offset: b.offset,
                target_speed: b.speed,
                min_clearance: b.min_clearance.is_finite().then_some(b.min_clearance),
            }),
        })
    }
}
