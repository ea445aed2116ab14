//! Link profiles with seeded latency, uniform jitter and loss.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Timestamp;
use crate::scenario::FieldError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkProfile {
    pub name: String,
    pub base_latency_us: u64,
    /// Half-width of the uniform jitter window.
    pub jitter_us: u64,
    pub loss_probability: f64,
    pub reorder_allowed: bool,
}

impl LinkProfile {
    pub fn new(name: &str, base_latency_us: u64, jitter_us: u64, loss_probability: f64, reorder_allowed: bool) -> Self {
        LinkProfile {
            name: name.to_string(),
            base_latency_us,
            jitter_us,
            loss_probability,
            reorder_allowed,
        }
    }

    /// 1 ms nominal latency with 99.999 % delivery.
    pub fn urllc() -> Self {
        Self::new("urllc", 1000, 200, 1e-5, false)
    }

    pub fn degraded() -> Self {
        Self::new("degraded", 20_000, 5_000, 1e-2, true)
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        if self.name.is_empty() {
            return Err(FieldError::new("name", "must not be empty"));
        }
        if !(self.loss_probability >= 0.0 && self.loss_probability <= 1.0) {
            return Err(FieldError::new("loss_probability", "must be in [0, 1]"));
        }
        if self.jitter_us > i64::MAX as u64 || self.base_latency_us > i64::MAX as u64 {
            return Err(FieldError::new("jitter_us", "out of range"));
        }
        Ok(())
    }

    /// Hands `message` to the link at `now`. Both random draws (loss, then
    /// jitter) are always consumed so the stream stays aligned.
    pub fn send<M, R: Rng + ?Sized>(&self, message: M, now: Timestamp, rng: &mut R) -> InTransit<M> {
        let u: f64 = rng.random();
        let j = self.jitter_us as i64;
        let jitter = if j == 0 { 0 } else { rng.random_range(-j..=j) };
        let dropped = u < self.loss_probability;
        let delivery = (now.0 as i128 + self.base_latency_us as i128 + jitter as i128).max(now.0 as i128);
        InTransit {
            message,
            send_time: now,
            delivery_time: Timestamp(delivery as u64),
            dropped,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InTransit<M> {
    pub message: M,
    pub send_time: Timestamp,
    pub delivery_time: Timestamp,
    pub dropped: bool,
}

impl<M> InTransit<M> {
    pub fn latency_us(&self) -> u64 {
        self.delivery_time.0 - self.send_time.0
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn fixed_latency_delivery() {
        let link = LinkProfile::new("u", 1000, 0, 1e-5, false);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = link.send((), Timestamp(5000), &mut rng);
        assert_eq!(t.delivery_time, Timestamp(6000));
    }

    #[test]
    fn certain_loss() {
        let link = LinkProfile::new("x", 1000, 10, 1.0, true);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..100).all(|_| link.send((), Timestamp(0), &mut rng).dropped));
    }

    #[test]
    fn never_delivers_before_send() {
        let link = LinkProfile::new("x", 10, 500, 0.0, true);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for k in 0..1000u64 {
            let t = link.send((), Timestamp(k), &mut rng);
            assert!(t.delivery_time >= t.send_time);
        }
    }

    #[test]
    fn jitter_support_and_mean() {
        let link = LinkProfile::new("x", 2000, 500, 0.0, true);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let lat: Vec<u64> = (0..10_000).map(|_| link.send((), Timestamp(1_000_000), &mut rng).latency_us()).collect();
        assert!(lat.iter().all(|&l| (1500..=2500).contains(&l)));
        let mean = lat.iter().sum::<u64>() as f64 / lat.len() as f64;
        // uniform integer on ±500: sd ≈ 289, so 15 µs is over 5 standard errors
        assert!((mean - 2000.0).abs() < 15.0, "{mean}");
    }
}
