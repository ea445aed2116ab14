//! Socially aware navigation for the medical bed.

pub mod planner;
pub mod proxemics;

use serde::{Deserialize, Serialize};

use crate::fusion::{GlobalPicture, TrackSnapshot};
use crate::geometry::{AgentClass, Timestamp};
use crate::scenario::FieldError;
use crate::Vec2;

pub use planner::{
    kinematic_step, CandidateEval, Limits, PathState, PlanError, PlanOutcome, PlannedTrajectory, Planner, Rejection,
    StopReason, TrajectoryPoint,
};
pub use proxemics::{personal_space_cost, PersonalSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// Agent moved by the planner; declared Stationary in the scenario.
    pub bed_agent_id: u32,
    pub max_speed_mps: f64,
    pub max_accel_mps2: f64,
    pub max_lateral_speed_mps: f64,
    pub horizon_s: f64,
    pub step_s: f64,
    pub lateral_samples: usize,
    pub max_lateral_offset_m: f64,
    pub speed_samples: usize,
    pub w_path: f64,
    pub w_social: f64,
    pub w_speed: f64,
    pub stop_cost_threshold: f64,
    pub r_hard_m: f64,
    pub sigma_front_m: f64,
    pub sigma_side_m: f64,
    pub sigma_back_m: f64,
    /// Below this speed a person's personal space is isotropic.
    pub stationary_speed_mps: f64,
    pub boundary_margin_m: f64,
    pub yield_range_m: f64,
    pub yield_margin_mps: f64,
    /// Half-angle of the rear cone watched for overtaking walkers.
    pub yield_cone_rad: f64,
    /// How far ahead (along the path) a yielded-to person must be before the
    /// bed moves again.
    pub yield_release_m: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            bed_agent_id: 0,
            max_speed_mps: 0.8,
            max_accel_mps2: 1.0,
            max_lateral_speed_mps: 0.5,
            horizon_s: 3.0,
            step_s: 0.2,
            lateral_samples: 7,
            max_lateral_offset_m: 1.2,
            speed_samples: 5,
            w_path: 1.0,
            w_social: 4.0,
            w_speed: 1.0,
            stop_cost_threshold: 3.0,
            r_hard_m: 0.45,
            sigma_front_m: 1.2,
            sigma_side_m: 0.6,
            sigma_back_m: 0.6,
            stationary_speed_mps: 0.1,
            boundary_margin_m: 0.4,
            yield_range_m: 5.0,
            yield_margin_mps: 0.3,
            yield_cone_rad: std::f64::consts::FRAC_PI_4,
            yield_release_m: 1.0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), FieldError> {
        let positive = [
            (self.max_speed_mps, "max_speed_mps"),
            (self.max_accel_mps2, "max_accel_mps2"),
            (self.max_lateral_speed_mps, "max_lateral_speed_mps"),
            (self.horizon_s, "horizon_s"),
            (self.step_s, "step_s"),
            (self.r_hard_m, "r_hard_m"),
            (self.sigma_front_m, "sigma_front_m"),
            (self.sigma_side_m, "sigma_side_m"),
            (self.sigma_back_m, "sigma_back_m"),
            (self.yield_cone_rad, "yield_cone_rad"),
        ];
        for (v, name) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(FieldError::new(name, "must be positive"));
            }
        }
        let non_negative = [
            (self.w_path, "w_path"),
            (self.w_social, "w_social"),
            (self.w_speed, "w_speed"),
            (self.stop_cost_threshold, "stop_cost_threshold"),
            (self.max_lateral_offset_m, "max_lateral_offset_m"),
            (self.stationary_speed_mps, "stationary_speed_mps"),
            (self.boundary_margin_m, "boundary_margin_m"),
            (self.yield_range_m, "yield_range_m"),
            (self.yield_margin_mps, "yield_margin_mps"),
            (self.yield_release_m, "yield_release_m"),
        ];
        for (v, name) in non_negative {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(FieldError::new(name, "must be non-negative"));
            }
        }
        if self.sigma_front_m < self.sigma_back_m {
            return Err(FieldError::new("sigma_front_m", "must be at least sigma_back_m"));
        }
        if self.lateral_samples == 0 || self.speed_samples == 0 {
            return Err(FieldError::new("lateral_samples", "sample counts must be at least 1"));
        }
        if self.step_s > self.horizon_s {
            return Err(FieldError::new("step_s", "must not exceed horizon_s"));
        }
        Ok(())
    }
}

/// Order for the bed to stop and hold at a corridor edge while a faster
/// walker overtakes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YieldDirective {
    pub person_track_id: u64,
    pub speed_cap: f64,
    pub hold_offset: f64,
}

/// Finds a person overtaking the bed from behind: inside the rear cone and
/// `yield_range`, faster than the bed by more than `yield_margin`, and
/// closing. Returns the nearest such person's track id.
pub fn yield_check(
    bed_position: Vec2,
    bed_velocity: Vec2,
    bed_heading: f64,
    persons: &[TrackSnapshot],
    now: Timestamp,
    config: &PlannerConfig,
) -> Option<u64> {
    let back = Vec2::from_angle(bed_heading) * -1.0;
    let bed_speed = bed_velocity.norm();
    let mut best: Option<(f64, u64)> = None;
    for p in persons {
        let pos = p.position_at(now);
        let rel = pos - bed_position;
        let dist = rel.norm();
        if dist >= config.yield_range_m || dist == 0.0 {
            continue;
        }
        let cos = rel.dot(back) / dist;
        if cos < config.yield_cone_rad.cos() {
            continue;
        }
        if p.velocity.norm() <= bed_speed + config.yield_margin_mps {
            continue;
        }
        let closing = (p.velocity - bed_velocity).dot(bed_position - pos) > 0.0;
        if closing && best.is_none_or(|(d, _)| dist < d) {
            best = Some((dist, p.track_id));
        }
    }
    best.map(|(_, id)| id)
}

/// What the navigator decided for one control instant.
#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    Plan(PlannedTrajectory),
    Stop { reason: String },
    Yield(YieldDirective),
    NoBedTrack,
}

/// Target for the bed's rate-limited controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionCommand {
    pub target_speed: f64,
    /// `None` holds the current lateral offset.
    pub target_offset: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavStep {
    pub decision: Decision,
    pub bed: Option<TrackSnapshot>,
    pub persons: Vec<TrackSnapshot>,
    pub command: MotionCommand,
}

/// Cloud-side consumer of the global picture: finds the bed's own track,
/// runs the yield check with its latch, then the lattice planner.
#[derive(Debug, Clone)]
pub struct SocialNavigator {
    planner: Planner,
    bed_track: Option<u64>,
    last_bed_position: Vec2,
    latch: Option<YieldDirective>,
}

impl SocialNavigator {
    pub fn new(planner: Planner) -> Self {
        let start = planner.path().points()[0];
        SocialNavigator {
            planner,
            bed_track: None,
            last_bed_position: start,
            latch: None,
        }
    }

    pub fn planner(&self) -> &Planner {
        &self.planner
    }

    fn find_bed<'a>(&mut self, picture: &'a GlobalPicture, now: Timestamp) -> Option<&'a TrackSnapshot> {
        if let Some(t) = self.bed_track.and_then(|id| picture.track(id)) {
            return Some(t);
        }
        let found = picture
            .tracks
            .iter()
            .filter(|t| t.class == AgentClass::MedicalBed)
            .min_by(|a, b| {
                let da = a.position_at(now).distance(self.last_bed_position);
                let db = b.position_at(now).distance(self.last_bed_position);
                da.total_cmp(&db).then(a.track_id.cmp(&b.track_id))
            });
        self.bed_track = found.map(|t| t.track_id);
        found
    }

    pub fn decide(&mut self, picture: &GlobalPicture, now: Timestamp) -> NavStep {
        let hold = MotionCommand {
            target_speed: 0.0,
            target_offset: None,
        };
        let Some(bed) = self.find_bed(picture, now).cloned() else {
            return NavStep {
                decision: Decision::NoBedTrack,
                bed: None,
                persons: Vec::new(),
                command: hold,
            };
        };
        self.last_bed_position = bed.position_at(now);
        // Other bed-class tracks are treated as equipment, not people.
        let persons: Vec<TrackSnapshot> = picture
            .tracks
            .iter()
            .filter(|t| t.track_id != bed.track_id && t.class != AgentClass::MedicalBed)
            .cloned()
            .collect();

        let config = self.planner.config().clone();
        let path = self.planner.path();
        let bed_pos = bed.position_at(now);
        let (bed_s, bed_d) = path.project(bed_pos);
        let (_, tangent) = path.sample(bed_s);

        if let Some(latch) = self.latch {
            let released = match persons.iter().find(|p| p.track_id == latch.person_track_id) {
                None => true,
                Some(p) => path.project(p.position_at(now)).0 > bed_s + config.yield_release_m,
            };
            if released {
                self.latch = None;
            }
        }
        if self.latch.is_none() {
            if let Some(id) = yield_check(bed_pos, bed.velocity, tangent.angle(), &persons, now, &config) {
                let person = persons.iter().find(|p| p.track_id == id).expect("id from list");
                let (_, person_d) = path.project(person.position_at(now));
                let side = if person_d >= bed_d { -1.0 } else { 1.0 };
                let hold_offset = self.planner.edge_offset(bed_s, side);
                self.latch = Some(YieldDirective {
                    person_track_id: id,
                    speed_cap: 0.0,
                    hold_offset,
                });
            }
        }
        if let Some(directive) = self.latch {
            return NavStep {
                decision: Decision::Yield(directive),
                command: MotionCommand {
                    target_speed: directive.speed_cap,
                    target_offset: Some(directive.hold_offset),
                },
                bed: Some(bed),
                persons,
            };
        }

        let (decision, command) = match self.planner.plan(&bed, &persons, now) {
            Ok(PlanOutcome::Trajectory(t)) => {
                let c = MotionCommand {
                    target_speed: t.target_speed,
                    target_offset: Some(t.lateral_offset),
                };
                (Decision::Plan(t), c)
            }
            Ok(PlanOutcome::Stop { reason, .. }) => (
                Decision::Stop {
                    reason: format!("{reason:?}"),
                },
                hold,
            ),
            Err(e) => (Decision::Stop { reason: e.to_string() }, hold),
        };
        NavStep {
            decision,
            bed: Some(bed),
            persons,
            command,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::kalman::identity;
    use crate::fusion::TrackStatus;

    fn snap(id: u64, class: AgentClass, p: (f64, f64), v: (f64, f64)) -> TrackSnapshot {
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
            contributing_nodes: vec![4],
        }
    }

    #[test]
    fn yield_examples() {
        let c = PlannerConfig::default();
        let bed_p = Vec2::new(10.0, 0.0);
        let bed_v = Vec2::new(0.8, 0.0);
        assert_eq!(yield_check(bed_p, bed_v, 0.0, &[], Timestamp::ZERO, &c), None);
        let behind = snap(2, AgentClass::Pedestrian, (7.0, 0.3), (1.8, 0.0));
        assert_eq!(yield_check(bed_p, bed_v, 0.0, &[behind], Timestamp::ZERO, &c), Some(2));
        let ahead = snap(3, AgentClass::Pedestrian, (13.0, 0.3), (1.8, 0.0));
        assert_eq!(yield_check(bed_p, bed_v, 0.0, &[ahead], Timestamp::ZERO, &c), None);
        let slow = snap(4, AgentClass::Pedestrian, (7.0, 0.3), (1.0, 0.0));
        assert_eq!(yield_check(bed_p, bed_v, 0.0, &[slow], Timestamp::ZERO, &c), None);
        let beside = snap(5, AgentClass::Pedestrian, (9.0, 2.0), (1.8, 0.0));
        assert_eq!(yield_check(bed_p, bed_v, 0.0, &[beside], Timestamp::ZERO, &c), None);
    }

    #[test]
    fn navigator_latches_until_person_is_ahead() {
        let boundary = [Vec2::new(-2.0, -2.0), Vec2::new(40.0, -2.0), Vec2::new(40.0, 2.0), Vec2::new(-2.0, 2.0)];
        let planner = Planner::new(PlannerConfig::default(), &boundary, &[Vec2::new(0.0, 0.0), Vec2::new(30.0, 0.0)]).unwrap();
        let mut nav = SocialNavigator::new(planner);
        let bed = snap(1, AgentClass::MedicalBed, (10.0, 0.0), (0.8, 0.0));
        let mut pic = GlobalPicture {
            time: Timestamp::ZERO,
            tracks: vec![bed.clone(), snap(2, AgentClass::Pedestrian, (7.0, 0.9), (1.8, 0.0))],
        };
        let step = nav.decide(&pic, Timestamp::ZERO);
        match step.decision {
            Decision::Yield(d) => assert_eq!(d.hold_offset, -1.2),
            other => panic!("unexpected {other:?}"),
        }
        // walker now beside the bed, outside the rear cone: still latched
        pic.tracks[1] = snap(2, AgentClass::Pedestrian, (10.2, 0.9), (1.8, 0.0));
        assert!(matches!(nav.decide(&pic, Timestamp::ZERO).decision, Decision::Yield(_)));
        pic.tracks[1] = snap(2, AgentClass::Pedestrian, (12.0, 0.9), (1.8, 0.0));
        assert!(matches!(nav.decide(&pic, Timestamp::ZERO).decision, Decision::Plan(_)));
    }

    #[test]
    fn no_bed_track_holds() {
        let boundary = [Vec2::new(-2.0, -2.0), Vec2::new(40.0, -2.0), Vec2::new(40.0, 2.0)];
        let planner = Planner::new(PlannerConfig::default(), &boundary, &[Vec2::new(0.0, 0.0), Vec2::new(30.0, 0.0)]).unwrap();
        let mut nav = SocialNavigator::new(planner);
        let pic = GlobalPicture { time: Timestamp::ZERO, tracks: vec![] };
        let step = nav.decide(&pic, Timestamp::ZERO);
        assert_eq!(step.decision, Decision::NoBedTrack);
        assert_eq!(step.command.target_speed, 0.0);
    }
}
