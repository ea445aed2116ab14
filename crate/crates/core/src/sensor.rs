//! Infrastructure sensor node: visibility-limited, noisy object detection and
//! perception-message assembly.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{normalize_heading, segment_point_distance, AgentClass, Timestamp};
use crate::netsim::{ObjectRecord, PerceptionMessage, MAX_RECORDS};
use crate::scenario::{Agent, FieldError, WorldState};
use crate::{NodeExtrinsics, Pose2, Vec2};

/// Parametric detector model of one node. Field names match the scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorNodeConfig {
    pub node_id: u16,
    /// Sensor origin in the global frame; heading is the sector centre.
    pub pose: Pose2,
    pub mount_height_m: f64,
    pub fov_rad: f64,
    pub max_range_m: f64,
    pub detection_period_s: f64,
    pub noise_sigma_m: f64,
    pub miss_rate: f64,
    pub class_accuracy: f64,
    /// Name of the uplink profile.
    pub link: String,
}

impl SensorNodeConfig {
    pub fn extrinsics(&self) -> NodeExtrinsics {
        NodeExtrinsics {
            node_pose: self.pose,
            mount_height: self.mount_height_m,
        }
    }

    pub fn validate(&self, tick_dt_s: f64) -> Result<(), FieldError> {
        if !self.pose.is_finite() {
            return Err(FieldError::new("pose", "must be finite"));
        }
        if !(self.mount_height_m > 0.0) {
            return Err(FieldError::new("mount_height_m", "must be positive"));
        }
        if !(self.fov_rad > 0.0 && self.fov_rad <= std::f64::consts::TAU) {
            return Err(FieldError::new("fov_rad", "must be in (0, 2π]"));
        }
        if !(self.max_range_m > 0.0) || !self.max_range_m.is_finite() {
            return Err(FieldError::new("max_range_m", "must be positive"));
        }
        if !(self.detection_period_s >= tick_dt_s) || !self.detection_period_s.is_finite() {
            return Err(FieldError::new("detection_period_s", "must be at least tick_dt_s"));
        }
        if !(self.noise_sigma_m >= 0.0) || !self.noise_sigma_m.is_finite() {
            return Err(FieldError::new("noise_sigma_m", "must be non-negative"));
        }
        if !(self.miss_rate >= 0.0 && self.miss_rate < 1.0) {
            return Err(FieldError::new("miss_rate", "must be in [0, 1)"));
        }
        if !(self.class_accuracy > 0.0 && self.class_accuracy <= 1.0) {
            return Err(FieldError::new("class_accuracy", "must be in (0, 1]"));
        }
        Ok(())
    }

    /// Range and field-of-view test only (no occlusion).
    pub fn covers(&self, point: Vec2) -> bool {
        let origin = self.pose.position();
        let offset = point - origin;
        if offset.norm() > self.max_range_m {
            return false;
        }
        if self.fov_rad >= std::f64::consts::TAU || offset.norm_sq() == 0.0 {
            return true;
        }
        let rel = normalize_heading(offset.angle() - self.pose.heading).unwrap_or(0.0);
        rel.abs() <= self.fov_rad / 2.0
    }
}

/// One object detection, already expressed in the global frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub node_id: u16,
    pub local_object_index: u32,
    pub class_estimate: AgentClass,
    pub position_global: Vec2,
    pub capture_time: Timestamp,
    pub position_sigma: f64,
    /// Ground-truth source; simulation bookkeeping, never transmitted.
    pub truth_id: u32,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SensorError {
    #[error("{0} detections exceed the per-message limit of {MAX_RECORDS}")]
    TooManyDetections(usize),
    #[error("detections do not share the message capture time")]
    CaptureTimeMismatch,
}

/// True iff the agent is within range and field of view and the sight line
/// to its centre is not blocked by another agent's disk.
pub fn visible(node: &SensorNodeConfig, world: &WorldState, agent: &Agent) -> bool {
    let origin = node.pose.position();
    let target = agent.position();
    if !node.covers(target) {
        return false;
    }
    !world.agents.iter().any(|other| {
        other.agent_id != agent.agent_id
            && segment_point_distance(origin, target, other.position()) < other.radius
    })
}

/// One detection cycle. Static obstacles are mapped infrastructure and are
/// never reported. Draw order per visible agent: miss, noise x, noise y, class.
pub fn sense<R: Rng + ?Sized>(node: &SensorNodeConfig, world: &WorldState, rng: &mut R) -> Vec<Detection> {
    let mut out = Vec::new();
    for agent in &world.agents {
        if agent.class == AgentClass::StaticObstacle || !visible(node, world, agent) {
            continue;
        }
        let miss: f64 = rng.random();
        if miss < node.miss_rate {
            continue;
        }
        let nx: f64 = rng.sample(StandardNormal);
        let ny: f64 = rng.sample(StandardNormal);
        let class_draw: f64 = rng.random();
        let class_estimate = if class_draw < node.class_accuracy {
            agent.class
        } else {
            let others: Vec<AgentClass> = AgentClass::ALL.iter().copied().filter(|&c| c != agent.class).collect();
            others[rng.random_range(0..others.len())]
        };
        let p = agent.position();
        out.push(Detection {
            node_id: node.node_id,
            local_object_index: out.len() as u32,
            class_estimate,
            position_global: Vec2::new(p.x + node.noise_sigma_m * nx, p.y + node.noise_sigma_m * ny),
            capture_time: world.time,
            position_sigma: node.noise_sigma_m,
            truth_id: agent.agent_id,
        });
    }
    out
}

/// Packs one detection cycle into a wire message.
pub fn make_message(
    node_id: u16,
    detections: &[Detection],
    capture_time: Timestamp,
    seq: u32,
) -> Result<PerceptionMessage, SensorError> {
    if detections.len() > MAX_RECORDS {
        return Err(SensorError::TooManyDetections(detections.len()));
    }
    if detections.iter().any(|d| d.capture_time != capture_time) {
        return Err(SensorError::CaptureTimeMismatch);
    }
    Ok(PerceptionMessage {
        node_id,
        seq,
        capture_time,
        records: detections
            .iter()
            .map(|d| ObjectRecord {
                class_code: d.class_estimate.code(),
                x: d.position_global.x,
                y: d.position_global.y,
                sigma: d.position_sigma as f32,
            })
            .collect(),
    })
}
