//! Planar geometry, time and frame-transform primitives.
//!
//! The global frame is ENU (x east, y north) with an origin chosen per
//! scenario. Headings are measured counter-clockwise from +x.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::de::Deserializer;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("mount height must be positive, got {0}")]
    MountHeight(f64),
}

/// Microseconds since scenario start.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Timestamp(pub u64);

impl Timestamp {
    pub const ZERO: Timestamp = Timestamp(0);

    pub fn from_micros(us: u64) -> Self {
        Timestamp(us)
    }

    /// Rounds to the nearest microsecond; negative input saturates to zero.
    pub fn from_secs(secs: f64) -> Self {
        Timestamp(secs_to_micros(secs))
    }

    pub fn micros(self) -> u64 {
        self.0
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 * 1e-6
    }

    pub fn plus_micros(self, us: u64) -> Self {
        Timestamp(self.0 + us)
    }

    /// Signed difference `self - earlier` in seconds.
    pub fn secs_since(self, earlier: Timestamp) -> f64 {
        (self.0 as i128 - earlier.0 as i128) as f64 * 1e-6
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}us", self.0)
    }
}

pub fn secs_to_micros(secs: f64) -> u64 {
    if secs <= 0.0 {
        0
    } else {
        (secs * 1e6).round() as u64
    }
}

/// Planar vector / point. Serialized as a two-element array `[x, y]`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Vec2<T> {
    pub fn new(x: T, y: T) -> Self {
        Vec2 { x, y }
    }

    pub fn zero() -> Self {
        Vec2::new(T::zero(), T::zero())
    }

    pub fn from_angle(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Vec2::new(c, s)
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// z component of the 3D cross product.
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Self) -> T {
        (self - o).norm()
    }

    pub fn angle(self) -> T {
        self.y.atan2(self.x)
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Self {
        Vec2::new(-self.y, self.x)
    }

    pub fn rotate(self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, o: Self, t: T) -> Self {
        self + (o - self) * t
    }
}

impl<T: Real> Add for Vec2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Real> AddAssign for Vec2<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Real> Mul<T> for Vec2<T> {
    type Output = Self;
    fn mul(self, k: T) -> Self {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl<T: Real> Neg for Vec2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Vec2::new(-self.x, -self.y)
    }
}

impl<T: Serialize> Serialize for Vec2<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        (&self.x, &self.y).serialize(s)
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for Vec2<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (x, y) = <(T, T)>::deserialize(d)?;
        Ok(Vec2 { x, y })
    }
}

/// Planar rigid pose. `heading` is kept in (-π, π].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Pose2<T> {
    pub x: T,
    pub y: T,
    pub heading: T,
}

impl<T: Real> Pose2<T> {
    pub fn new(x: T, y: T, heading: T) -> Result<Self, GeometryError> {
        if !(x.is_finite() && y.is_finite()) {
            return Err(GeometryError::NonFinite("pose position"));
        }
        Ok(Pose2 {
            x,
            y,
            heading: normalize_heading(heading)?,
        })
    }

    pub fn position(&self) -> Vec2<T> {
        Vec2::new(self.x, self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.heading.is_finite()
    }
}

/// Pose of a sensor origin in the global frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeExtrinsics<T> {
    pub node_pose: Pose2<T>,
    /// Metadata only; the world is planar.
    pub mount_height: T,
}

impl<T: Real> NodeExtrinsics<T> {
    pub fn new(node_pose: Pose2<T>, mount_height: T) -> Result<Self, GeometryError> {
        if !node_pose.is_finite() {
            return Err(GeometryError::NonFinite("node pose"));
        }
        if !(mount_height > T::zero()) || !mount_height.is_finite() {
            return Err(GeometryError::MountHeight(
                mount_height.to_f64().unwrap_or(f64::NAN),
            ));
        }
        Ok(NodeExtrinsics {
            node_pose,
            mount_height,
        })
    }
}

/// Object class vocabulary. The numeric codes are part of the wire format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgentClass {
    Vehicle,
    Pedestrian,
    MedicalBed,
    StaticObstacle,
}

impl AgentClass {
    pub const ALL: [AgentClass; 4] = [
        AgentClass::Vehicle,
        AgentClass::Pedestrian,
        AgentClass::MedicalBed,
        AgentClass::StaticObstacle,
    ];

    pub fn code(self) -> u8 {
        match self {
            AgentClass::Vehicle => 0,
            AgentClass::Pedestrian => 1,
            AgentClass::MedicalBed => 2,
            AgentClass::StaticObstacle => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }
}

/// Wraps an angle into (-π, π]. Angles already in range are returned
/// unchanged, which makes the operation exactly idempotent.
pub fn normalize_heading<T: Real>(angle: T) -> Result<T, GeometryError> {
    if !angle.is_finite() {
        return Err(GeometryError::NonFinite("heading"));
    }
    let pi = T::PI();
    if angle > -pi && angle <= pi {
        return Ok(angle);
    }
    let two_pi = T::TAU();
    let mut r = angle % two_pi;
    if r < T::zero() {
        r = r + two_pi;
    }
    if r > pi {
        r = r - two_pi;
    }
    // -π can reappear after the subtraction through rounding.
    if r <= -pi {
        r = pi;
    }
    Ok(r)
}

/// Node-local point to global frame: rotate by the node heading, then translate.
pub fn to_global<T: Real>(ext: &NodeExtrinsics<T>, local: Vec2<T>) -> Result<Vec2<T>, GeometryError> {
    if !local.is_finite() {
        return Err(GeometryError::NonFinite("local point"));
    }
    if !ext.node_pose.is_finite() {
        return Err(GeometryError::NonFinite("node pose"));
    }
    Ok(local.rotate(ext.node_pose.heading) + ext.node_pose.position())
}

/// Inverse of [`to_global`].
pub fn to_local<T: Real>(ext: &NodeExtrinsics<T>, global: Vec2<T>) -> Result<Vec2<T>, GeometryError> {
    if !global.is_finite() {
        return Err(GeometryError::NonFinite("global point"));
    }
    if !ext.node_pose.is_finite() {
        return Err(GeometryError::NonFinite("node pose"));
    }
    Ok((global - ext.node_pose.position()).rotate(-ext.node_pose.heading))
}

/// Distance from `p` to the closed segment `a`–`b`.
pub fn segment_point_distance<T: Real>(a: Vec2<T>, b: Vec2<T>, p: Vec2<T>) -> T {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == T::zero() {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len_sq).max(T::zero()).min(T::one());
    p.distance(a + ab * t)
}

/// Open polyline with cached cumulative arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline<T> {
    points: Vec<Vec2<T>>,
    cumulative: Vec<T>,
}

impl<T: Real> Polyline<T> {
    /// Consecutive duplicate points are collapsed. Returns `None` for fewer
    /// than two distinct points.
    pub fn new(points: &[Vec2<T>]) -> Option<Self> {
        let mut pts: Vec<Vec2<T>> = Vec::with_capacity(points.len());
        for &p in points {
            if pts.last() != Some(&p) {
                pts.push(p);
            }
        }
        if pts.len() < 2 {
            return None;
        }
        let mut cumulative = Vec::with_capacity(pts.len());
        let mut acc = T::zero();
        cumulative.push(acc);
        for w in pts.windows(2) {
            acc = acc + w[0].distance(w[1]);
            cumulative.push(acc);
        }
        Some(Polyline {
            points: pts,
            cumulative,
        })
    }

    pub fn points(&self) -> &[Vec2<T>] {
        &self.points
    }

    pub fn length(&self) -> T {
        *self.cumulative.last().expect("non-empty")
    }

    fn segment_for(&self, s: T) -> usize {
        let n = self.points.len() - 1;
        match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&s).expect("finite arc length"))
        {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        }
    }

    /// Point and unit tangent at arc length `s`. Beyond either end the
    /// first/last segment is extended linearly.
    pub fn sample(&self, s: T) -> (Vec2<T>, Vec2<T>) {
        let i = self.segment_for(s);
        let a = self.points[i];
        let b = self.points[i + 1];
        let seg_len = self.cumulative[i + 1] - self.cumulative[i];
        let tangent = (b - a) * (T::one() / seg_len);
        (a + tangent * (s - self.cumulative[i]), tangent)
    }

    /// Arc length of the closest point and signed lateral offset (positive to
    /// the left of the direction of travel).
    pub fn project(&self, p: Vec2<T>) -> (T, T) {
        let mut best = (T::infinity(), T::zero(), T::zero());
        for (i, w) in self.points.windows(2).enumerate() {
            let ab = w[1] - w[0];
            let len_sq = ab.norm_sq();
            let t = ((p - w[0]).dot(ab) / len_sq).max(T::zero()).min(T::one());
            let foot = w[0] + ab * t;
            let d = p.distance(foot);
            if d < best.0 {
                let len = len_sq.sqrt();
                let lateral = ab.cross(p - w[0]) / len;
                best = (d, self.cumulative[i] + t * len, lateral);
            }
        }
        (best.1, best.2)
    }
}

/// Closed polygon given by its vertices (the closing edge is implicit).
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon<T> {
    vertices: Vec<Vec2<T>>,
}

impl<T: Real> Polygon<T> {
    /// A repeated first vertex at the end is dropped. Needs at least three vertices.
    pub fn new(points: &[Vec2<T>]) -> Option<Self> {
        let mut v = points.to_vec();
        if v.len() > 1 && v.first() == v.last() {
            v.pop();
        }
        if v.len() < 3 {
            return None;
        }
        Some(Polygon { vertices: v })
    }

    pub fn vertices(&self) -> &[Vec2<T>] {
        &self.vertices
    }

    fn edges(&self) -> impl Iterator<Item = (Vec2<T>, Vec2<T>)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn edge_distance(&self, p: Vec2<T>) -> T {
        self.edges()
            .map(|(a, b)| segment_point_distance(a, b, p))
            .fold(T::infinity(), T::min)
    }

    /// Even-odd rule; points on an edge count as outside.
    pub fn contains(&self, p: Vec2<T>) -> bool {
        if self.edge_distance(p) == T::zero() {
            return false;
        }
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use proptest::prelude::*;

    use super::*;

    fn ext(x: f64, y: f64, h: f64) -> NodeExtrinsics<f64> {
        NodeExtrinsics::new(Pose2::new(x, y, h).unwrap(), 5.0).unwrap()
    }

    fn close(a: Vec2<f64>, b: Vec2<f64>) -> bool {
        a.distance(b) < 1e-9
    }

    #[test]
    fn to_global_examples() {
        let p = to_global(&ext(0.0, 0.0, 0.0), Vec2::new(3.0, 4.0)).unwrap();
        assert_eq!(p, Vec2::new(3.0, 4.0));
        let p = to_global(&ext(0.0, 0.0, PI / 2.0), Vec2::new(1.0, 0.0)).unwrap();
        assert!(close(p, Vec2::new(0.0, 1.0)));
        // rotation by π maps (2,1) to (-2,-1); translation gives (8,-3)
        let p = to_global(&ext(10.0, -2.0, PI), Vec2::new(2.0, 1.0)).unwrap();
        assert!(close(p, Vec2::new(8.0, -3.0)));
    }

    #[test]
    fn to_local_examples() {
        let e = ext(0.0, 0.0, 0.0);
        let p = Vec2::new(-7.5, 2.25);
        assert!(close(to_local(&e, to_global(&e, p).unwrap()).unwrap(), p));
        let p = to_local(&ext(10.0, -2.0, PI), Vec2::new(8.0, -3.0)).unwrap();
        assert!(close(p, Vec2::new(2.0, 1.0)));
        // offset (0,1) rotated by -π/2 is (1,0)
        let p = to_local(&ext(5.0, 5.0, PI / 2.0), Vec2::new(5.0, 6.0)).unwrap();
        assert!(close(p, Vec2::new(1.0, 0.0)));
    }

    #[test]
    fn transforms_reject_non_finite() {
        let e = ext(0.0, 0.0, 0.0);
        assert!(to_global(&e, Vec2::new(f64::NAN, 0.0)).is_err());
        assert!(to_local(&e, Vec2::new(0.0, f64::INFINITY)).is_err());
        assert!(Pose2::new(f64::NAN, 0.0, 0.0).is_err());
        assert!(NodeExtrinsics::new(Pose2::new(0.0, 0.0, 0.0).unwrap(), 0.0).is_err());
    }

    #[test]
    fn normalize_heading_examples() {
        assert_eq!(normalize_heading(0.0).unwrap(), 0.0);
        assert!((normalize_heading(3.0 * PI).unwrap() - PI).abs() < 1e-12);
        assert_eq!(normalize_heading(-PI).unwrap(), PI);
        assert!(normalize_heading(f64::NAN).is_err());
        assert!(normalize_heading(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let e = NodeExtrinsics::new(Pose2::new(10.0f32, -2.0, std::f32::consts::PI).unwrap(), 3.0)
            .unwrap();
        let g = to_global(&e, Vec2::new(2.0f32, 1.0)).unwrap();
        assert!(g.distance(Vec2::new(8.0, -3.0)) < 1e-5);
        assert_eq!(normalize_heading(-std::f32::consts::PI).unwrap(), std::f32::consts::PI);
    }

    #[test]
    fn polyline_projection_and_sampling() {
        let line = Polyline::new(&[Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0), Vec2::new(10.0, 5.0)])
            .unwrap();
        assert_eq!(line.length(), 15.0);
        let (p, t) = line.sample(12.0);
        assert!(close(p, Vec2::new(10.0, 2.0)));
        assert!(close(t, Vec2::new(0.0, 1.0)));
        let (s, d) = line.project(Vec2::new(4.0, 1.5));
        assert!((s - 4.0).abs() < 1e-12 && (d - 1.5).abs() < 1e-12);
        let (s, d) = line.project(Vec2::new(11.0, 3.0));
        assert!((s - 13.0).abs() < 1e-12 && (d + 1.0).abs() < 1e-12);
        assert!(Polyline::new(&[Vec2::new(1.0, 1.0), Vec2::new(1.0, 1.0)]).is_none());
    }

    #[test]
    fn polygon_containment() {
        let sq = Polygon::new(&[
            Vec2::new(0.0, 0.0),
            Vec2::new(4.0, 0.0),
            Vec2::new(4.0, 4.0),
            Vec2::new(0.0, 4.0),
            Vec2::new(0.0, 0.0),
        ])
        .unwrap();
        assert!(sq.contains(Vec2::new(1.0, 1.0)));
        assert!(!sq.contains(Vec2::new(5.0, 1.0)));
        assert!(!sq.contains(Vec2::new(4.0, 2.0)));
        assert!((sq.edge_distance(Vec2::new(1.0, 2.0)) - 1.0f64).abs() < 1e-12);
    }

    fn finite() -> impl Strategy<Value = f64> {
        -1000.0..1000.0f64
    }

    proptest! {
        #[test]
        fn round_trip_is_exact_to_nanometres(x in finite(), y in finite(), h in -10.0..10.0f64,
                                              px in finite(), py in finite()) {
            let e = ext(x, y, h);
            let p = Vec2::new(px, py);
            let back = to_local(&e, to_global(&e, p).unwrap()).unwrap();
            prop_assert!(back.distance(p) < 1e-9);
        }

        #[test]
        fn to_global_preserves_distances(x in finite(), y in finite(), h in -10.0..10.0f64,
                                         ax in finite(), ay in finite(), bx in finite(), by in finite()) {
            let e = ext(x, y, h);
            let a = Vec2::new(ax, ay);
            let b = Vec2::new(bx, by);
            let ga = to_global(&e, a).unwrap();
            let gb = to_global(&e, b).unwrap();
            prop_assert!((ga.distance(gb) - a.distance(b)).abs() < 1e-9);
        }

        #[test]
        fn normalize_is_idempotent_and_in_range(a in -1e4..1e4f64) {
            let n = normalize_heading(a).unwrap();
            prop_assert!(n > -PI && n <= PI);
            prop_assert_eq!(normalize_heading(n).unwrap(), n);
            let diff = (a - n) / (2.0 * PI);
            prop_assert!((diff - diff.round()).abs() < 1e-9);
        }
    }
}
