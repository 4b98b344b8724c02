use std::collections::VecDeque;

use nalgebra::{Matrix3, SMatrix, SVector};

use crate::domain::Vec3;
use crate::error::{Error, Result};

pub type Mat6 = SMatrix<f64, 6, 6>;
pub type Vec6 = SVector<f64, 6>;
type Mat63 = SMatrix<f64, 6, 3>;
type Mat36 = SMatrix<f64, 3, 6>;

/// Mean `[tx, vx, ty, vy, tz, vz]` and its covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub mean: Vec6,
    pub covariance: Mat6,
}

impl FilterState {
    pub fn new(position: Vec3, velocity: Vec3, variance: f64) -> Self {
        let mut mean = Vec6::zeros();
        for axis in 0..3 {
            mean[2 * axis] = position[axis];
            mean[2 * axis + 1] = velocity[axis];
        }
        Self {
            mean,
            covariance: Mat6::identity() * variance,
        }
    }

    pub fn position(&self) -> Vec3 {
        Vec3::new(self.mean[0], self.mean[2], self.mean[4])
    }

    pub fn velocity(&self) -> Vec3 {
        Vec3::new(self.mean[1], self.mean[3], self.mean[5])
    }

    /// Smallest eigenvalue of the covariance.
    pub fn min_eigenvalue(&self) -> f64 {
        self.covariance.symmetric_eigenvalues().min()
    }
}

fn transition(dt: f64) -> (Mat6, Mat63) {
    let mut f = Mat6::identity();
    let mut g = Mat63::zeros();
    for axis in 0..3 {
        f[(2 * axis, 2 * axis + 1)] = dt;
        g[(2 * axis, axis)] = 0.5 * dt * dt;
        g[(2 * axis + 1, axis)] = dt;
    }
    (f, g)
}

fn velocity_selector() -> Mat36 {
    let mut h = Mat36::zeros();
    for axis in 0..3 {
        h[(axis, 2 * axis + 1)] = 1.0;
    }
    h
}

fn symmetrize(m: &mut Mat6) {
    let t = m.transpose();
    *m = (*m + t) * 0.5;
}

fn all_finite<const R: usize, const C: usize>(m: &SMatrix<f64, R, C>) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Prediction: per axis `t += v dt + a dt²/2`, `v += a dt`, and
/// `Σ ← F Σ Fᵀ + G Q Gᵀ`.
pub fn predict(state: &FilterState, accel: &Vec3, dt: f64, q: &Matrix3<f64>) -> Result<FilterState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Numeric(format!("prediction step needs dt > 0, got {dt}")));
    }
    if !all_finite(accel) || !all_finite(q) {
        return Err(Error::Numeric(format!("non-finite prediction input (a = {accel:?})")));
    }
    let (f, g) = transition(dt);
    let mean = f * state.mean + g * accel;
    let mut covariance = f * state.covariance * f.transpose() + g * q * g.transpose();
    symmetrize(&mut covariance);
    Ok(FilterState { mean, covariance })
}

/// Result of a velocity correction.
#[derive(Debug, Clone)]
pub struct Correction {
    pub state: FilterState,
    /// Measured minus predicted velocity.
    pub innovation: Vec3,
}

/// Kalman correction with a velocity measurement.
pub fn correct(state: &FilterState, velocity: &Vec3, r: &Matrix3<f64>) -> Result<Correction> {
    if !all_finite(velocity) || !all_finite(r) {
        return Err(Error::Numeric(format!("non-finite correction input (v = {velocity:?})")));
    }
    let h = velocity_selector();
    let innovation = velocity - h * state.mean;
    let s = h * state.covariance * h.transpose() + r;
    let s_inv = s
        .cholesky()
        .map(|c| c.inverse())
        .or_else(|| s.try_inverse())
        .or_else(|| s.pseudo_inverse(1e-15).ok())
        .ok_or_else(|| Error::Numeric(format!("innovation covariance cannot be inverted: {s:?}")))?;
    let k = state.covariance * h.transpose() * s_inv;
    let mean = state.mean + k * innovation;
    let mut covariance = (Mat6::identity() - k * h) * state.covariance;
    symmetrize(&mut covariance);
    if !all_finite(&covariance) || !all_finite(&mean) {
        return Err(Error::Numeric("correction produced non-finite state".into()));
    }
    Ok(Correction {
        state: FilterState { mean, covariance },
        innovation,
    })
}

/// Empirical population covariance over the most recent `capacity`
/// vectors, regularized by `epsilon * I`.
#[derive(Debug, Clone)]
pub struct CovarianceWindow {
    capacity: usize,
    epsilon: f64,
    prior: Matrix3<f64>,
    samples: VecDeque<Vec3>,
    sum: Vec3,
    sum_sq: Matrix3<f64>,
    since_refresh: usize,
}

impl CovarianceWindow {
    pub fn new(capacity: usize, epsilon: f64, prior: Matrix3<f64>) -> Self {
        Self {
            capacity: capacity.max(1),
            epsilon,
            prior,
            samples: VecDeque::with_capacity(capacity.max(1) + 1),
            sum: Vec3::zeros(),
            sum_sq: Matrix3::zeros(),
            since_refresh: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn push(&mut self, sample: Vec3) -> Matrix3<f64> {
        self.samples.push_back(sample);
        self.sum += sample;
        self.sum_sq += sample * sample.transpose();
        if self.samples.len() > self.capacity {
            let old = self.samples.pop_front().unwrap_or_default();
            self.sum -= old;
            self.sum_sq -= old * old.transpose();
        }
        self.since_refresh += 1;
        if self.since_refresh >= self.capacity {
            // Running sums accumulate rounding; rebuild them periodically.
            self.sum = self.samples.iter().sum();
            self.sum_sq = self.samples.iter().map(|s| s * s.transpose()).sum();
            self.since_refresh = 0;
        }
        self.covariance()
    }

    pub fn covariance(&self) -> Matrix3<f64> {
        let n = self.samples.len();
        if n < 2 {
            return self.prior;
        }
        let n = n as f64;
        let mean = self.sum / n;
        let mut cov = self.sum_sq / n - mean * mean.transpose();
        cov = (cov + cov.transpose()) * 0.5;
        cov + Matrix3::identity() * self.epsilon
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_of_constant_samples_is_epsilon() {
        let mut w = CovarianceWindow::new(10, 1e-9, Matrix3::identity());
        for _ in 0..20 {
            w.push(Vec3::new(3.0, -1.0, 2.0));
        }
        let c = w.covariance();
        assert!((c - Matrix3::identity() * 1e-9).abs().max() < 1e-15);
    }

    #[test]
    fn alternating_samples_have_unit_x_variance() {
        let mut w = CovarianceWindow::new(100, 1e-9, Matrix3::identity());
        for k in 0..100 {
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            w.push(Vec3::new(s, 0.0, 0.0));
        }
        let c = w.covariance();
        assert!((c[(0, 0)] - (1.0 + 1e-9)).abs() < 1e-12);
        assert!((c[(1, 1)] - 1e-9).abs() < 1e-15);
        assert!(c[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn short_window_uses_the_prior() {
        let prior = Matrix3::identity() * 7.0;
        let mut w = CovarianceWindow::new(5, 1e-9, prior);
        assert_eq!(w.covariance(), prior);
        assert_eq!(w.push(Vec3::x()), prior);
        assert_ne!(w.push(Vec3::y()), prior);
    }

    #[test]
    fn window_forgets_old_samples() {
        let mut w = CovarianceWindow::new(4, 0.0, Matrix3::identity());
        for _ in 0..10 {
            w.push(Vec3::new(100.0, 0.0, 0.0));
        }
        for _ in 0..4 {
            w.push(Vec3::zeros());
        }
        assert_eq!(w.len(), 4);
        assert!(w.covariance().abs().max() < 1e-9);
    }
}
