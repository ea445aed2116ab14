//! Asymmetric Gaussian personal space.

use crate::geometry::Vec2;
use crate::num::Real;

/// Personal space around one person. `heading` is the walking direction;
/// `None` (a standing person) makes the space isotropic with `sigma_side`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersonalSpace<T> {
    pub center: Vec2<T>,
    pub heading: Option<T>,
    pub sigma_front: T,
    pub sigma_side: T,
    pub sigma_back: T,
}

impl<T: Real> PersonalSpace<T> {
    /// Squared Mahalanobis-style distance of `point` from the centre.
    pub fn distance_sq(&self, point: Vec2<T>) -> T {
        let d = point - self.center;
        match self.heading {
            None => d.norm_sq() / (self.sigma_side * self.sigma_side),
            Some(h) => {
                let u = Vec2::from_angle(h);
                let along = d.dot(u);
                let lateral = d.cross(u);
                let s_long = if along >= T::zero() { self.sigma_front } else { self.sigma_back };
                along * along / (s_long * s_long) + lateral * lateral / (self.sigma_side * self.sigma_side)
            }
        }
    }

    /// Intrusion cost in `(0, 1]`, peaking at the centre.
    pub fn cost(&self, point: Vec2<T>) -> T {
        (-self.distance_sq(point) * T::half()).exp()
    }
}

pub fn personal_space_cost<T: Real>(space: &PersonalSpace<T>, point: Vec2<T>) -> T {
    space.cost(point)
}
