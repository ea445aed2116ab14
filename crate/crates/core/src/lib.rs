//! Cloud autonomous mobility pipeline.
//!
//! Infrastructure sensor nodes observe a simulated world and send compact
//! perception frames over emulated 5G links to a cloud fusion engine. The
//! fused picture feeds a hazard monitor (outdoor conflicts and warnings) and
//! a social navigation planner (indoor medical bed). Everything is seeded
//! and deterministic; runs are recorded as replayable traces.
//!
//! Numeric kernels are generic over [`num::Real`] (`f32` or `f64`); the
//! pipeline itself uses the `f64` aliases below.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod fusion;
pub mod geometry;
pub mod harness;
pub mod hazard;
pub mod netsim;
pub mod num;
pub mod rng;
pub mod scenario;
pub mod sensor;
pub mod social;

pub use geometry::{AgentClass, Timestamp};

pub type Vec2 = geometry::Vec2<f64>;
pub type Pose2 = geometry::Pose2<f64>;
pub type NodeExtrinsics = geometry::NodeExtrinsics<f64>;
pub type Polyline = geometry::Polyline<f64>;
pub type Polygon = geometry::Polygon<f64>;
pub type CvState = fusion::kalman::CvState<f64>;
pub type PersonalSpace = social::PersonalSpace<f64>;
