//! Cloud fusion: constant-velocity tracking with optimal association.

pub mod assignment;
pub mod engine;
pub mod kalman;
pub mod track;

use serde::{Deserialize, Serialize};

use crate::scenario::FieldError;

pub use assignment::{gated_assignment, solve_square, Assignment};
pub use engine::{FusionEngine, FusionStats, GlobalPicture, IngestOutcome};
pub use kalman::{FilterError, Mat4};
pub use track::{associate, predict_track, update_track, Measurement, Track, TrackSnapshot, TrackStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    /// Euclidean association gate.
    pub gate_m: f64,
    /// White-noise acceleration spectral density, m²/s³.
    pub accel_density: f64,
    pub confirm_threshold: u32,
    pub miss_threshold: u32,
    pub drop_timeout_s: f64,
    pub staleness_window_s: f64,
    pub initial_velocity_sigma_mps: f64,
    pub min_measurement_sigma_m: f64,
    pub class_vote_window: usize,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            gate_m: 2.5,
            accel_density: 0.5,
            confirm_threshold: 3,
            miss_threshold: 3,
            drop_timeout_s: 2.0,
            staleness_window_s: 0.15,
            initial_velocity_sigma_mps: 3.0,
            min_measurement_sigma_m: 1e-6,
            class_vote_window: 10,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<(), FieldError> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(FieldError::new(name, "must be positive"))
            }
        };
        positive(self.gate_m, "gate_m")?;
        positive(self.drop_timeout_s, "drop_timeout_s")?;
        positive(self.initial_velocity_sigma_mps, "initial_velocity_sigma_mps")?;
        positive(self.min_measurement_sigma_m, "min_measurement_sigma_m")?;
        if !(self.accel_density >= 0.0) || !self.accel_density.is_finite() {
            return Err(FieldError::new("accel_density", "must be non-negative"));
        }
        if !(self.staleness_window_s >= 0.0) || !self.staleness_window_s.is_finite() {
            return Err(FieldError::new("staleness_window_s", "must be non-negative"));
        }
        if self.confirm_threshold == 0 {
            return Err(FieldError::new("confirm_threshold", "must be at least 1"));
        }
        if self.miss_threshold == 0 {
            return Err(FieldError::new("miss_threshold", "must be at least 1"));
        }
        if self.class_vote_window == 0 {
            return Err(FieldError::new("class_vote_window", "must be at least 1"));
        }
        Ok(())
    }
}
