//! Constant-velocity Kalman filter over the state `[x, y, vx, vy]`.
//!
//! Process noise is white acceleration held piecewise-constant over each
//! interval, with variance `q / dt` for spectral density `q`. Per axis this
//! gives `Q = q * [[dt³/4, dt²/2], [dt²/2, dt]]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec2;
use crate::num::Real;

pub type Mat4<T> = [[T; 4]; 4];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("cannot predict backwards by {0} s")]
    NegativeInterval(f64),
    #[error("covariance lost positive definiteness")]
    NotPositiveDefinite,
    #[error("non-finite measurement or variance")]
    NonFinite,
}

/// Filter mean and covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvState<T> {
    pub mean: [T; 4],
    pub cov: Mat4<T>,
}

impl<T: Real> CvState<T> {
    pub fn new(mean: [T; 4], cov: Mat4<T>) -> Self {
        CvState { mean, cov }
    }

    /// Position measured with isotropic standard deviation `pos_sigma`, velocity
    /// unknown with isotropic standard deviation `vel_sigma`.
    pub fn from_position(p: Vec2<T>, pos_sigma: T, vel_sigma: T) -> Self {
        let mut cov = zeros();
        cov[0][0] = pos_sigma * pos_sigma;
        cov[1][1] = pos_sigma * pos_sigma;
        cov[2][2] = vel_sigma * vel_sigma;
        cov[3][3] = vel_sigma * vel_sigma;
        CvState {
            mean: [p.x, p.y, T::zero(), T::zero()],
            cov,
        }
    }

    pub fn position(&self) -> Vec2<T> {
        Vec2::new(self.mean[0], self.mean[1])
    }

    pub fn velocity(&self) -> Vec2<T> {
        Vec2::new(self.mean[2], self.mean[3])
    }
}

pub fn zeros<T: Real>() -> Mat4<T> {
    [[T::zero(); 4]; 4]
}

pub fn identity<T: Real>() -> Mat4<T> {
    let mut m = zeros();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = T::one();
    }
    m
}

pub fn transition<T: Real>(dt: T) -> Mat4<T> {
    let mut f = identity();
    f[0][2] = dt;
    f[1][3] = dt;
    f
}

pub fn process_noise<T: Real>(accel_density: T, dt: T) -> Mat4<T> {
    let dt2 = dt * dt;
    let pp = accel_density * dt2 * dt / T::lit(4.0);
    let pv = accel_density * dt2 / T::two();
    let vv = accel_density * dt;
    let mut q = zeros();
    q[0][0] = pp;
    q[1][1] = pp;
    q[0][2] = pv;
    q[2][0] = pv;
    q[1][3] = pv;
    q[3][1] = pv;
    q[2][2] = vv;
    q[3][3] = vv;
    q
}

pub fn mat_mul<T: Real>(a: &Mat4<T>, b: &Mat4<T>) -> Mat4<T> {
    let mut out = zeros();
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = T::zero();
            for k in 0..4 {
                acc = acc + a[i][k] * b[k][j];
            }
            out[i][j] = acc;
        }
    }
    out
}

pub fn transpose<T: Real>(a: &Mat4<T>) -> Mat4<T> {
    let mut out = zeros();
    for i in 0..4 {
        for j in 0..4 {
            out[j][i] = a[i][j];
        }
    }
    out
}

fn symmetrize<T: Real>(m: &mut Mat4<T>) {
    for i in 0..4 {
        for j in (i + 1)..4 {
            let avg = (m[i][j] + m[j][i]) * T::half();
            m[i][j] = avg;
            m[j][i] = avg;
        }
    }
}

/// Lower-triangular Cholesky factor, or `None` if `m` is not positive definite.
pub fn cholesky<T: Real>(m: &Mat4<T>) -> Option<Mat4<T>> {
    let mut l = zeros();
    for j in 0..4 {
        let mut diag = m[j][j];
        for k in 0..j {
            diag = diag - l[j][k] * l[j][k];
        }
        if !(diag > T::zero()) || !diag.is_finite() {
            return None;
        }
        let ljj = diag.sqrt();
        l[j][j] = ljj;
        for i in (j + 1)..4 {
            let mut acc = m[i][j];
            for k in 0..j {
                acc = acc - l[i][k] * l[j][k];
            }
            l[i][j] = acc / ljj;
        }
    }
    Some(l)
}

/// Propagates the state by `dt` seconds: `x ← F x`, `P ← F P Fᵀ + Q(dt)`.
/// A zero interval returns the state untouched.
pub fn predict<T: Real>(state: &CvState<T>, dt: T, accel_density: T) -> Result<CvState<T>, FilterError> {
    if dt < T::zero() {
        return Err(FilterError::NegativeInterval(dt.to_f64().unwrap_or(f64::NAN)));
    }
    if dt == T::zero() {
        return Ok(*state);
    }
    let f = transition(dt);
    let m = state.mean;
    let mean = [m[0] + dt * m[2], m[1] + dt * m[3], m[2], m[3]];
    let fp = mat_mul(&f, &state.cov);
    let mut cov = mat_mul(&fp, &transpose(&f));
    let q = process_noise(accel_density, dt);
    for i in 0..4 {
        for j in 0..4 {
            cov[i][j] = cov[i][j] + q[i][j];
        }
    }
    symmetrize(&mut cov);
    Ok(CvState { mean, cov })
}

/// Position measurement update with `R = sigma² I`, in Joseph form.
pub fn update<T: Real>(state: &CvState<T>, z: Vec2<T>, sigma: T) -> Result<CvState<T>, FilterError> {
    if !z.is_finite() || !sigma.is_finite() {
        return Err(FilterError::NonFinite);
    }
    let r = sigma * sigma;
    let p = &state.cov;
    // S = H P Hᵀ + R, a 2×2 block
    let s00 = p[0][0] + r;
    let s01 = p[0][1];
    let s10 = p[1][0];
    let s11 = p[1][1] + r;
    let det = s00 * s11 - s01 * s10;
    if !(det > T::zero()) {
        return Err(FilterError::NotPositiveDefinite);
    }
    let inv = [[s11 / det, -s01 / det], [-s10 / det, s00 / det]];
    // K = P Hᵀ S⁻¹, 4×2
    let mut k = [[T::zero(); 2]; 4];
    for (i, row) in k.iter_mut().enumerate() {
        row[0] = p[i][0] * inv[0][0] + p[i][1] * inv[1][0];
        row[1] = p[i][0] * inv[0][1] + p[i][1] * inv[1][1];
    }
    let innov = [z.x - state.mean[0], z.y - state.mean[1]];
    let mut mean = state.mean;
    for i in 0..4 {
        mean[i] = mean[i] + k[i][0] * innov[0] + k[i][1] * innov[1];
    }
    // (I - K H)
    let mut a = identity();
    for i in 0..4 {
        a[i][0] = a[i][0] - k[i][0];
        a[i][1] = a[i][1] - k[i][1];
    }
    let mut cov = mat_mul(&mat_mul(&a, p), &transpose(&a));
    for i in 0..4 {
        for j in 0..4 {
            cov[i][j] = cov[i][j] + r * (k[i][0] * k[j][0] + k[i][1] * k[j][1]);
        }
    }
    symmetrize(&mut cov);
    if cholesky(&cov).is_none() {
        return Err(FilterError::NotPositiveDefinite);
    }
    Ok(CvState { mean, cov })
}
