use std::f64::consts::TAU;

use crate::domain::{unit_orientation, ImuSample, Quat, Vec3};
use crate::error::Result;

/// First-order high-pass `y[k] = α (y[k-1] + x[k] - x[k-1])` per axis with
/// `α = RC / (RC + dt)`, `RC = 1 / (2π fc)`. Memory starts at zero, so a
/// stream that begins mid-motion is not mistaken for an offset.
#[derive(Debug, Clone)]
pub struct HighPass {
    alpha: Option<f64>,
    prev_x: Vec3,
    prev_y: Vec3,
}

impl HighPass {
    /// `cutoff_hz == 0` gives a passthrough.
    pub fn new(cutoff_hz: f64, dt: f64) -> Self {
        let alpha = (cutoff_hz > 0.0).then(|| {
            let rc = 1.0 / (TAU * cutoff_hz);
            rc / (rc + dt)
        });
        Self {
            alpha,
            prev_x: Vec3::zeros(),
            prev_y: Vec3::zeros(),
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn step(&mut self, x: Vec3) -> Vec3 {
        let Some(alpha) = self.alpha else {
            return x;
        };
        let y = (self.prev_y + x - self.prev_x) * alpha;
        self.prev_x = x;
        self.prev_y = y;
        y
    }
}

/// Turns body-frame specific force into filtered world-frame acceleration.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    /// World-frame gravity, m/s².
    pub gravity: Vec3,
    highpass: HighPass,
}

impl Preprocessor {
    pub fn new(gravity: Vec3, cutoff_hz: f64, dt: f64) -> Self {
        Self {
            gravity,
            highpass: HighPass::new(cutoff_hz, dt),
        }
    }

    /// Rotates into the world frame and removes the gravity reaction, without
    /// filtering or advancing state.
    pub fn world_specific_force(&self, imu: &ImuSample, orientation: &Quat) -> Result<Vec3> {
        let q = unit_orientation(orientation)?;
        Ok(q.transform_vector(&imu.accel) + self.gravity)
    }

    /// `highpass(R(q) f + g)`; advances the filter memory.
    pub fn step(&mut self, imu: &ImuSample, orientation: &Quat) -> Result<Vec3> {
        let a = self.world_specific_force(imu, orientation)?;
        Ok(self.highpass.step(a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::UnitQuaternion;
    use std::f64::consts::FRAC_PI_2;

    const G: f64 = 9.81;

    #[test]
    fn stationary_identity_orientation_gives_zero() {
        let mut p = Preprocessor::new(Vec3::new(0.0, 0.0, -G), 0.05, 0.002);
        let imu = ImuSample {
            t: 0.0,
            accel: Vec3::new(0.0, 0.0, G),
        };
        for _ in 0..100 {
            let a = p.step(&imu, &Quat::identity()).unwrap();
            assert!(a.norm() < 1e-12);
        }
    }

    #[test]
    fn dc_step_decays() {
        let mut hp = HighPass::new(0.5, 0.002);
        let x = Vec3::new(1.0, -2.0, 0.5);
        let first = hp.step(x);
        let mut last = first;
        for _ in 0..5000 {
            last = hp.step(x);
        }
        assert!(first.norm() > 0.99 * x.norm());
        assert!(last.norm() < 1e-3 * x.norm());
        // Geometric decay by α per step after the first.
        let a = hp.alpha().unwrap();
        let next = hp.step(x);
        assert!((next - last * a).norm() < 1e-15);
    }

    #[test]
    fn zero_cutoff_is_passthrough() {
        let mut hp = HighPass::new(0.0, 0.002);
        assert!(hp.alpha().is_none());
        for k in 0..10 {
            let x = Vec3::new(k as f64, 1.0, -1.0);
            assert_eq!(hp.step(x), x);
        }
    }

    #[test]
    fn rotated_body_measuring_gravity_maps_to_world_up() {
        let q = UnitQuaternion::from_axis_angle(&Vec3::x_axis(), FRAC_PI_2);
        // Body z is world -y after this rotation, so the upward reaction
        // appears on body y.
        let body = q.inverse_transform_vector(&Vec3::new(0.0, 0.0, G));
        assert!((body - Vec3::new(0.0, G, 0.0)).norm() < 1e-12);
        let p = Preprocessor::new(Vec3::new(0.0, 0.0, -G), 0.0, 0.002);
        let imu = ImuSample { t: 0.0, accel: body };
        let rotated = q.transform_vector(&imu.accel);
        assert!((rotated - Vec3::new(0.0, 0.0, G)).norm() < 1e-12);
        let a = p.world_specific_force(&imu, q.quaternion()).unwrap();
        assert!(a.norm() < 1e-12);
    }

    #[test]
    fn non_unit_quaternion_is_rejected() {
        let mut p = Preprocessor::new(Vec3::new(0.0, 0.0, -G), 0.05, 0.002);
        let imu = ImuSample {
            t: 0.0,
            accel: Vec3::zeros(),
        };
        assert!(p.step(&imu, &Quat::new(2.0, 0.0, 0.0, 0.0)).is_err());
    }
}
