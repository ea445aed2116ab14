//! Declarative scenarios and fixed-tick ground-truth kinematics.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fusion::FusionConfig;
use crate::geometry::{secs_to_micros, AgentClass, Timestamp};
use crate::harness::MetricsConfig;
use crate::hazard::{HazardConfig, SubscriberConfig};
use crate::netsim::LinkProfile;
use crate::sensor::SensorNodeConfig;
use crate::social::PlannerConfig;
use crate::{Pose2, Vec2};

/// Device density above which the 5G massive machine-type class saturates.
pub const MMTC_DEVICES_PER_KM2: f64 = 1.0e6;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario schema error at line {line}, column {column}: {message}")]
    Schema {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid field `{field}`{}: {reason}", line_suffix(*.line))]
    Invalid {
        field: String,
        reason: String,
        line: Option<usize>,
    },
    #[error("duplicate id {id} in `{field}`{}", line_suffix(*.line))]
    DuplicateId {
        field: String,
        id: String,
        line: Option<usize>,
    },
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn line_suffix(line: Option<usize>) -> String {
    line.map(|l| format!(" (line {l})")).unwrap_or_default()
}

/// A field-level validation failure reported by nested config types.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub reason: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        FieldError {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Behavior {
    FollowPath,
    Stationary,
    /// Follows its path with a timed speed schedule.
    Scripted,
}

/// Speed change of a scripted agent, effective from `at_s` onwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedChange {
    pub at_s: f64,
    pub speed_mps: f64,
}

/// Agent initializer as written in a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentInit {
    pub agent_id: u32,
    pub class: AgentClass,
    pub behavior: Behavior,
    pub radius_m: f64,
    #[serde(default)]
    pub speed_mps: f64,
    #[serde(default)]
    pub path: Vec<Vec2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose: Option<Pose2>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub script: Vec<SpeedChange>,
}

/// Ground-truth agent state.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub agent_id: u32,
    pub class: AgentClass,
    pub pose: Pose2,
    pub speed: f64,
    pub radius: f64,
    pub path: Vec<Vec2>,
    pub behavior: Behavior,
    pub script: Vec<SpeedChange>,
    leg: usize,
    leg_offset: f64,
}

impl Agent {
    pub fn from_init(init: &AgentInit) -> Agent {
        let (pose, leg) = match init.behavior {
            Behavior::FollowPath | Behavior::Scripted if init.path.len() >= 2 => {
                let a = init.path[0];
                let b = init.path[1];
                let heading = (b - a).angle();
                (Pose2 { x: a.x, y: a.y, heading }, 0)
            }
            _ => {
                let pose = init.pose.unwrap_or_else(|| {
                    let p = init.path.first().copied().unwrap_or_default();
                    Pose2 { x: p.x, y: p.y, heading: 0.0 }
                });
                (pose, 0)
            }
        };
        Agent {
            agent_id: init.agent_id,
            class: init.class,
            pose,
            // a stationary agent's declared speed only matters once something
            // external moves it
            speed: if init.behavior == Behavior::Stationary { 0.0 } else { init.speed_mps },
            radius: init.radius_m,
            path: init.path.clone(),
            behavior: init.behavior,
            script: init.script.clone(),
            leg,
            leg_offset: 0.0,
        }
    }

    pub fn position(&self) -> Vec2 {
        self.pose.position()
    }

    /// Ground-truth velocity along the current heading.
    pub fn velocity(&self) -> Vec2 {
        Vec2::from_angle(self.pose.heading) * self.speed
    }

    fn scheduled_speed(&self, t: Timestamp) -> f64 {
        let now = t.as_secs();
        self.script
            .iter()
            .rev()
            .find(|c| c.at_s <= now + 1e-9)
            .map_or(self.speed, |c| c.speed_mps)
    }

    /// Moves `distance` metres along the path, splitting at waypoints.
    fn advance(&mut self, distance: f64) {
        let mut remaining = distance;
        loop {
            if self.leg + 1 >= self.path.len() {
                self.arrive();
                return;
            }
            let a = self.path[self.leg];
            let b = self.path[self.leg + 1];
            let seg = b - a;
            let len = seg.norm();
            let left = len - self.leg_offset;
            if remaining < left {
                self.leg_offset += remaining;
                let u = seg * (1.0 / len);
                let p = a + u * self.leg_offset;
                self.pose = Pose2 {
                    x: p.x,
                    y: p.y,
                    heading: seg.angle(),
                };
                return;
            }
            remaining -= left.max(0.0);
            self.leg += 1;
            self.leg_offset = 0.0;
            if self.leg + 1 >= self.path.len() {
                self.pose.x = b.x;
                self.pose.y = b.y;
                if len > 0.0 {
                    self.pose.heading = seg.angle();
                }
                self.arrive();
                return;
            }
            if remaining == 0.0 {
                let next = self.path[self.leg + 1] - b;
                self.pose = Pose2 {
                    x: b.x,
                    y: b.y,
                    heading: next.angle(),
                };
                return;
            }
        }
    }

    fn arrive(&mut self) {
        self.behavior = Behavior::Stationary;
        self.speed = 0.0;
    }

    /// Places an externally controlled agent; used for planner-driven agents.
    pub fn set_motion(&mut self, pose: Pose2, speed: f64) {
        self.pose = pose;
        self.speed = speed;
    }
}

/// Ground-truth snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub time: Timestamp,
    pub agents: Vec<Agent>,
}

impl WorldState {
    /// Initial state, agents ordered by id.
    pub fn initial(spec: &ScenarioSpec) -> WorldState {
        let mut agents: Vec<Agent> = spec.agents.iter().map(Agent::from_init).collect();
        agents.sort_by_key(|a| a.agent_id);
        WorldState {
            time: Timestamp::ZERO,
            agents,
        }
    }

    pub fn agent(&self, id: u32) -> Option<&Agent> {
        self.agents.iter().find(|a| a.agent_id == id)
    }

    pub fn agent_mut(&mut self, id: u32) -> Option<&mut Agent> {
        self.agents.iter_mut().find(|a| a.agent_id == id)
    }
}

/// Advances every agent by one tick of `dt` seconds.
///
/// Path-following agents move exactly `speed * dt` of arc length; reaching
/// the final waypoint makes an agent stationary.
pub fn step_world(state: &WorldState, _spec: &ScenarioSpec, dt: f64) -> WorldState {
    let mut next = state.clone();
    for agent in &mut next.agents {
        match agent.behavior {
            Behavior::Stationary => {}
            Behavior::FollowPath => {
                let d = agent.speed * dt;
                agent.advance(d);
            }
            Behavior::Scripted => {
                agent.speed = agent.scheduled_speed(state.time);
                let d = agent.speed * dt;
                if d > 0.0 {
                    agent.advance(d);
                } else if agent.leg + 1 >= agent.path.len() {
                    agent.arrive();
                }
            }
        }
    }
    next.time = state.time.plus_micros(secs_to_micros(dt));
    next
}

fn default_max_speed() -> f64 {
    30.0
}

/// Validated scenario description. See `scenarios/` for the bundled files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    /// Free-form remarks; JSON has no comments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    /// Statement of the global frame convention.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<String>,
    pub duration_s: f64,
    pub tick_dt_s: f64,
    pub rng_seed: u64,
    #[serde(default = "default_max_speed")]
    pub max_speed_mps: f64,
    pub nodes: Vec<SensorNodeConfig>,
    pub links: Vec<LinkProfile>,
    pub agents: Vec<AgentInit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Vec<Vec2>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_path: Option<Vec<Vec2>>,
    #[serde(default)]
    pub fusion: FusionConfig,
    #[serde(default)]
    pub hazard: HazardConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subscribers: Vec<SubscriberConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planner: Option<PlannerConfig>,
    #[serde(default)]
    pub metrics: MetricsConfig,
}

impl ScenarioSpec {
    pub fn tick_micros(&self) -> u64 {
        secs_to_micros(self.tick_dt_s)
    }

    pub fn tick_count(&self) -> u64 {
        (self.duration_s / self.tick_dt_s + 1e-9).floor() as u64
    }

    pub fn link(&self, name: &str) -> Option<&LinkProfile> {
        self.links.iter().find(|l| l.name == name)
    }

    /// Checks every invariant; returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>, FieldError> {
        let mut warnings = Vec::new();
        if !(self.tick_dt_s > 0.0) || !self.tick_dt_s.is_finite() {
            return Err(FieldError::new("tick_dt_s", "must be positive"));
        }
        if !(self.duration_s >= self.tick_dt_s) || !self.duration_s.is_finite() {
            return Err(FieldError::new("duration_s", "must be at least tick_dt_s"));
        }
        if self.tick_micros() == 0 {
            return Err(FieldError::new("tick_dt_s", "must be at least one microsecond"));
        }
        if !(self.max_speed_mps > 0.0) {
            return Err(FieldError::new("max_speed_mps", "must be positive"));
        }

        let mut names = BTreeSet::new();
        for (i, link) in self.links.iter().enumerate() {
            link.validate().map_err(|e| nest(&format!("links[{i}]"), e))?;
            if !names.insert(link.name.as_str()) {
                return Err(FieldError::new(format!("links[{i}].name"), format!("duplicate link `{}`", link.name)));
            }
        }

        let mut ids = BTreeSet::new();
        for (i, node) in self.nodes.iter().enumerate() {
            node.validate(self.tick_dt_s).map_err(|e| nest(&format!("nodes[{i}]"), e))?;
            if !ids.insert(node.node_id) {
                return Err(FieldError::new(
                    format!("nodes[{i}].node_id"),
                    format!("duplicate id {}", node.node_id),
                ));
            }
            if self.link(&node.link).is_none() {
                return Err(FieldError::new(format!("nodes[{i}].link"), format!("unknown link `{}`", node.link)));
            }
        }

        let mut agent_ids = BTreeSet::new();
        for (i, a) in self.agents.iter().enumerate() {
            let f = |name: &str| format!("agents[{i}].{name}");
            if !agent_ids.insert(a.agent_id) {
                return Err(FieldError::new(f("agent_id"), format!("duplicate id {}", a.agent_id)));
            }
            if !(a.radius_m > 0.0) || !a.radius_m.is_finite() {
                return Err(FieldError::new(f("radius_m"), "must be positive"));
            }
            if !(a.speed_mps >= 0.0) || a.speed_mps > self.max_speed_mps {
                return Err(FieldError::new(f("speed_mps"), "must be within [0, max_speed_mps]"));
            }
            if a.path.iter().any(|p| !p.is_finite()) {
                return Err(FieldError::new(f("path"), "waypoints must be finite"));
            }
            match a.behavior {
                Behavior::FollowPath | Behavior::Scripted => {
                    if a.path.len() < 2 {
                        return Err(FieldError::new(f("path"), "path-following agents need at least 2 waypoints"));
                    }
                }
                Behavior::Stationary => {
                    if a.pose.is_none() && a.path.is_empty() {
                        return Err(FieldError::new(f("pose"), "stationary agents need a pose"));
                    }
                }
            }
            if let Some(p) = &a.pose {
                if !p.is_finite() {
                    return Err(FieldError::new(f("pose"), "must be finite"));
                }
            }
            let mut last = f64::NEG_INFINITY;
            for (k, c) in a.script.iter().enumerate() {
                if !(c.at_s >= last) || !(c.speed_mps >= 0.0) || c.speed_mps > self.max_speed_mps {
                    return Err(FieldError::new(
                        format!("agents[{i}].script[{k}]"),
                        "times must be non-decreasing and speeds within [0, max_speed_mps]",
                    ));
                }
                last = c.at_s;
            }
        }

        if let Some(b) = &self.boundary {
            if b.len() < 3 || b.iter().any(|p| !p.is_finite()) {
                return Err(FieldError::new("boundary", "needs at least 3 finite vertices"));
            }
        }
        if let Some(r) = &self.reference_path {
            if crate::Polyline::new(r).is_none() || r.iter().any(|p| !p.is_finite()) {
                return Err(FieldError::new("reference_path", "needs at least 2 distinct finite points"));
            }
        }

        self.fusion.validate().map_err(|e| nest("fusion", e))?;
        self.hazard.validate().map_err(|e| nest("hazard", e))?;
        self.metrics.validate().map_err(|e| nest("metrics", e))?;

        let mut sub_ids = BTreeSet::new();
        for (i, s) in self.subscribers.iter().enumerate() {
            if !sub_ids.insert(s.subscriber_id) {
                return Err(FieldError::new(
                    format!("subscribers[{i}].subscriber_id"),
                    format!("duplicate id {}", s.subscriber_id),
                ));
            }
            if self.link(&s.link).is_none() {
                return Err(FieldError::new(format!("subscribers[{i}].link"), format!("unknown link `{}`", s.link)));
            }
        }

        if let Some(p) = &self.planner {
            p.validate().map_err(|e| nest("planner", e))?;
            if self.boundary.is_none() || self.reference_path.is_none() {
                return Err(FieldError::new("planner", "requires `boundary` and `reference_path`"));
            }
            match self.agents.iter().find(|a| a.agent_id == p.bed_agent_id) {
                Some(a) if a.class == AgentClass::MedicalBed && a.behavior == Behavior::Stationary => {}
                _ => {
                    return Err(FieldError::new(
                        "planner.bed_agent_id",
                        "must name a MedicalBed agent declared Stationary (the planner moves it)",
                    ))
                }
            }
        }

        if let Some(density) = self.device_density_per_km2() {
            if density > MMTC_DEVICES_PER_KM2 {
                let w = format!(
                    "device density {density:.0}/km² exceeds the mMTC bound of {MMTC_DEVICES_PER_KM2:.0}/km²"
                );
                log::warn!("{w}");
                warnings.push(w);
            }
        }
        Ok(warnings)
    }

    /// Connected devices (nodes and subscribers) per square kilometre of the
    /// area spanned by node coverage.
    pub fn device_density_per_km2(&self) -> Option<f64> {
        if self.nodes.is_empty() {
            return None;
        }
        let (mut lo, mut hi) = (Vec2::new(f64::MAX, f64::MAX), Vec2::new(f64::MIN, f64::MIN));
        for n in &self.nodes {
            let p = n.pose.position();
            lo = Vec2::new(lo.x.min(p.x - n.max_range_m), lo.y.min(p.y - n.max_range_m));
            hi = Vec2::new(hi.x.max(p.x + n.max_range_m), hi.y.max(p.y + n.max_range_m));
        }
        let area_km2 = (hi.x - lo.x) * (hi.y - lo.y) * 1e-6;
        let devices = (self.nodes.len() + self.subscribers.len()) as f64;
        Some(devices / area_km2)
    }
}

fn nest(prefix: &str, e: FieldError) -> FieldError {
    FieldError::new(format!("{prefix}.{}", e.field), e.reason)
}

/// Best-effort source line of a field path such as `nodes[3].fov_rad`:
/// the n-th occurrence of the last key, with n taken from the last index.
fn locate_field_line(document: &str, field: &str) -> Option<usize> {
    let last = field.rsplit('.').next()?;
    let key = last.split('[').next()?;
    let occurrence = field
        .rsplit_once('[')
        .and_then(|(_, rest)| rest.split(']').next())
        .and_then(|n| n.parse::<usize>().ok())
        .filter(|_| !last.contains('['))
        .unwrap_or(0);
    let needle = format!("\"{key}\"");
    let pos = document.match_indices(&needle).nth(occurrence)?.0;
    Some(document[..pos].matches('\n').count() + 1)
}

/// Parses and validates a scenario document.
pub fn load_scenario(document: &str) -> Result<ScenarioSpec, ScenarioError> {
    let spec: ScenarioSpec = serde_json::from_str(document).map_err(|e| ScenarioError::Schema {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    match spec.validate() {
        Ok(_) => Ok(spec),
        Err(e) => {
            let line = locate_field_line(document, &e.field);
            if e.reason.starts_with("duplicate") {
                Err(ScenarioError::DuplicateId {
                    id: e.reason.trim_start_matches("duplicate ").to_string(),
                    field: e.field,
                    line,
                })
            } else {
                Err(ScenarioError::Invalid {
                    field: e.field,
                    reason: e.reason,
                    line,
                })
            }
        }
    }
}

pub fn load_scenario_file(path: impl AsRef<Path>) -> Result<ScenarioSpec, ScenarioError> {
    let path = path.as_ref();
    let doc = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_scenario(&doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn minimal_doc(tick: f64, agents: &str) -> String {
        format!(
            r#"{{
  "name": "t",
  "duration_s": 10.0,
  "tick_dt_s": {tick},
  "rng_seed": 1,
  "nodes": [],
  "links": [],
  "agents": [{agents}]
}}"#
        )
    }

    fn spec_with(agents: &str) -> ScenarioSpec {
        load_scenario(&minimal_doc(0.5, agents)).unwrap()
    }

    #[test]
    fn zero_tick_is_rejected() {
        let err = load_scenario(&minimal_doc(0.0, "")).unwrap_err();
        match err {
            ScenarioError::Invalid { field, line, .. } => {
                assert_eq!(field, "tick_dt_s");
                assert_eq!(line, Some(4));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn schema_errors_carry_line() {
        let doc = minimal_doc(0.5, "").replace("\"rng_seed\": 1", "\"rng_seed\": \"x\"");
        match load_scenario(&doc).unwrap_err() {
            ScenarioError::Schema { line, .. } => assert_eq!(line, 5),
            other => panic!("unexpected {other:?}"),
        }
        let doc = minimal_doc(0.5, "").replace("\"name\"", "\"nmae\"");
        assert!(matches!(load_scenario(&doc), Err(ScenarioError::Schema { .. })));
    }

    #[test]
    fn duplicate_agent_ids_are_rejected() {
        let a = r#"{"agent_id": 1, "class": "Pedestrian", "behavior": "Stationary", "radius_m": 0.3, "pose": {"x":0,"y":0,"heading":0}}"#;
        let err = load_scenario(&minimal_doc(0.5, &format!("{a},{a}"))).unwrap_err();
        assert!(matches!(err, ScenarioError::DuplicateId { .. }), "{err}");
    }

    #[test]
    fn follow_path_needs_two_waypoints() {
        let a = r#"{"agent_id": 1, "class": "Vehicle", "behavior": "FollowPath", "radius_m": 1, "speed_mps": 1, "path": [[0,0]]}"#;
        assert!(load_scenario(&minimal_doc(0.5, a)).is_err());
    }

    #[test]
    fn constant_velocity_step() {
        let spec = spec_with(
            r#"{"agent_id": 1, "class": "Vehicle", "behavior": "FollowPath", "radius_m": 1, "speed_mps": 2, "path": [[0,0],[10,0]]}"#,
        );
        let w0 = WorldState::initial(&spec);
        let w1 = step_world(&w0, &spec, 0.5);
        let a = &w1.agents[0];
        assert_eq!(a.position(), Vec2::new(1.0, 0.0));
        assert_eq!(a.pose.heading, 0.0);
        assert_eq!(w1.time, Timestamp(500_000));
    }

    #[test]
    fn stationary_agent_does_not_move() {
        let spec = spec_with(
            r#"{"agent_id": 4, "class": "Pedestrian", "behavior": "Stationary", "radius_m": 0.3, "speed_mps": 1.0, "pose": {"x":3,"y":-1,"heading":1.0}}"#,
        );
        let w0 = WorldState::initial(&spec);
        let w1 = step_world(&w0, &spec, 0.5);
        assert_eq!(w1.agents[0].pose, w0.agents[0].pose);
    }

    #[test]
    fn arrival_splits_tick_and_stops() {
        let spec = spec_with(
            r#"{"agent_id": 1, "class": "Vehicle", "behavior": "FollowPath", "radius_m": 1, "speed_mps": 3, "path": [[0,0],[1,0],[1,1]]}"#,
        );
        let w = step_world(&WorldState::initial(&spec), &spec, 0.5);
        let a = &w.agents[0];
        assert!(a.position().distance(Vec2::new(1.0, 0.5)) < 1e-12);
        assert!((a.pose.heading - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        let w = step_world(&w, &spec, 0.5);
        assert_eq!(w.agents[0].position(), Vec2::new(1.0, 1.0));
        assert_eq!(w.agents[0].behavior, Behavior::Stationary);
        assert_eq!(w.agents[0].speed, 0.0);
    }

    #[test]
    fn scripted_speed_schedule() {
        let spec = spec_with(
            r#"{"agent_id": 1, "class": "Pedestrian", "behavior": "Scripted", "radius_m": 0.3, "path": [[0,0],[100,0]],
                "script": [{"at_s": 0.0, "speed_mps": 0.0}, {"at_s": 1.0, "speed_mps": 2.0}]}"#,
        );
        let mut w = WorldState::initial(&spec);
        for _ in 0..2 {
            w = step_world(&w, &spec, 0.5);
        }
        assert_eq!(w.agents[0].position(), Vec2::new(0.0, 0.0));
        w = step_world(&w, &spec, 0.5);
        assert_eq!(w.agents[0].position(), Vec2::new(1.0, 0.0));
    }

    #[test]
    fn polygon_lap_returns_to_start() {
        // 24-gon of radius 10; speed chosen so the lap takes exactly 200 ticks.
        let n = 24;
        let pts: Vec<String> = (0..=n)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * (k % n) as f64 / n as f64;
                format!("[{:?},{:?}]", 10.0 * a.cos(), 10.0 * a.sin())
            })
            .collect();
        let perimeter = n as f64 * 2.0 * 10.0 * (std::f64::consts::PI / n as f64).sin();
        let dt = 0.05;
        let speed = perimeter / (200.0 * dt);
        let doc = minimal_doc(
            dt,
            &format!(
                r#"{{"agent_id": 1, "class": "Vehicle", "behavior": "FollowPath", "radius_m": 1, "speed_mps": {speed:?}, "path": [{}]}}"#,
                pts.join(",")
            ),
        );
        let spec = load_scenario(&doc).unwrap();
        let mut w = WorldState::initial(&spec);
        let start = w.agents[0].position();
        let mut travelled = 0.0;
        for _ in 0..200 {
            let next = step_world(&w, &spec, dt);
            let step = next.agents[0].position().distance(w.agents[0].position());
            assert!(step <= speed * dt + 1e-9);
            travelled += step;
            w = next;
        }
        assert!(w.agents[0].position().distance(start) < 1e-6);
        // chord sum can only undercut arc length at corners
        assert!(travelled <= perimeter + 1e-9);
    }

    #[test]
    fn density_warning() {
        let mut spec = spec_with("");
        let node: SensorNodeConfig = serde_json::from_str(
            r#"{"node_id": 1, "pose": {"x":0,"y":0,"heading":0}, "mount_height_m": 5, "fov_rad": 3.14,
                "max_range_m": 0.001, "detection_period_s": 0.5, "noise_sigma_m": 0.1, "miss_rate": 0.0,
                "class_accuracy": 1.0, "link": "l"}"#,
        )
        .unwrap();
        spec.nodes.push(node);
        spec.links.push(LinkProfile::new("l", 1000, 0, 0.0, true));
        let warnings = spec.validate().unwrap();
        assert_eq!(warnings.len(), 1);
    }
}
