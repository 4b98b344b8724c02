//! Shared domain types, time alignment and ground-truth labelling.

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Quat = Quaternion<f64>;

/// Stillness threshold on ground-truth speed, m/s.
pub const DEFAULT_VELOCITY_THRESHOLD: f64 = 0.2;

/// Allowed deviation of an orientation quaternion's norm from one.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample {
    pub t: f64,
    /// Specific force in the body frame, m/s², gravity included.
    pub accel: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseSample {
    pub t: f64,
    pub position: Vec3,
    /// Body-to-world rotation, `(w, x, y, z)`.
    pub orientation: Quat,
    pub velocity: Option<Vec3>,
}

/// One navigation estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub position: Vec3,
    pub velocity: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotionLabel {
    Motion,
    Stillness,
}

impl MotionLabel {
    /// Class index used by the classifiers: stillness 0, motion 1.
    pub fn class_index(self) -> usize {
        match self {
            MotionLabel::Stillness => 0,
            MotionLabel::Motion => 1,
        }
    }

    pub fn from_class_index(i: usize) -> Self {
        if i == 1 {
            MotionLabel::Motion
        } else {
            MotionLabel::Stillness
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MotionLabel::Motion => "motion",
            MotionLabel::Stillness => "stillness",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "motion" => Some(MotionLabel::Motion),
            "stillness" => Some(MotionLabel::Stillness),
            _ => None,
        }
    }

    /// Stillness iff `speed < threshold` (strict).
    pub fn from_speed(speed: f64, threshold: f64) -> Self {
        if speed < threshold {
            MotionLabel::Stillness
        } else {
            MotionLabel::Motion
        }
    }
}

/// One recording: IMU stream, ground-truth poses and optional per-IMU-sample
/// labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub name: String,
    pub imu: Vec<ImuSample>,
    pub gt: Vec<PoseSample>,
    pub labels: Option<Vec<(f64, MotionLabel)>>,
}

impl Sequence {
    pub fn validate(&self) -> Result<()> {
        if self.imu.is_empty() {
            return Err(Error::InsufficientData(format!("sequence '{}' has no IMU samples", self.name)));
        }
        if self.gt.is_empty() {
            return Err(Error::InsufficientData(format!(
                "sequence '{}' has no ground-truth poses",
                self.name
            )));
        }
        check_increasing(self.imu.iter().map(|s| s.t), "imu")?;
        check_increasing(self.gt.iter().map(|s| s.t), "gt")?;
        for s in &self.imu {
            if !s.accel.iter().all(|v| v.is_finite()) {
                return Err(Error::Validation(format!("non-finite acceleration at t={}", s.t)));
            }
        }
        for p in &self.gt {
            let finite = p.position.iter().chain(p.orientation.coords.iter()).all(|v| v.is_finite())
                && p.velocity.is_none_or(|v| v.iter().all(|x| x.is_finite()));
            if !finite {
                return Err(Error::Validation(format!("non-finite pose at t={}", p.t)));
            }
        }
        let (i0, i1) = (self.imu[0].t, self.imu[self.imu.len() - 1].t);
        let (g0, g1) = (self.gt[0].t, self.gt[self.gt.len() - 1].t);
        if i1 < g0 || g1 < i0 {
            return Err(Error::Validation(format!(
                "imu span [{i0}, {i1}] and ground-truth span [{g0}, {g1}] do not overlap"
            )));
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.imu.len() {
                return Err(Error::Validation(format!(
                    "{} labels for {} IMU samples",
                    labels.len(),
                    self.imu.len()
                )));
            }
            for (k, ((tl, _), s)) in labels.iter().zip(&self.imu).enumerate() {
                if (tl - s.t).abs() > 1e-9 {
                    return Err(Error::Validation(format!(
                        "label {k} at t={tl} does not match IMU sample at t={}",
                        s.t
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        match (self.imu.first(), self.imu.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    pub fn imu_times(&self) -> Vec<f64> {
        self.imu.iter().map(|s| s.t).collect()
    }

    pub fn label_values(&self) -> Option<Vec<MotionLabel>> {
        self.labels.as_ref().map(|l| l.iter().map(|(_, m)| *m).collect())
    }
}

fn check_increasing(times: impl Iterator<Item = f64>, stream: &str) -> Result<()> {
    let mut prev: Option<f64> = None;
    for (i, t) in times.enumerate() {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::Validation(format!("{stream} sample {i} has invalid timestamp {t}")));
        }
        if let Some(p) = prev {
            if t <= p {
                return Err(Error::Validation(format!(
                    "{stream} sample {i} at t={t} does not follow t={p}"
                )));
            }
        }
        prev = Some(t);
    }
    Ok(())
}

/// Checks the unit-norm invariant and returns the rotation.
pub fn unit_orientation(q: &Quat) -> Result<UnitQuaternion<f64>> {
    let n = q.norm();
    if !n.is_finite() || (n - 1.0).abs() > UNIT_NORM_TOLERANCE {
        return Err(Error::Validation(format!("orientation quaternion has norm {n}, expected 1")));
    }
    Ok(UnitQuaternion::new_unchecked(*q))
}

/// Shortest-path spherical interpolation; falls back to normalized linear
/// interpolation for nearly identical rotations.
pub fn slerp(a: &Quat, b: &Quat, s: f64) -> Quat {
    let mut dot = a.coords.dot(&b.coords);
    let mut b = *b;
    if dot < 0.0 {
        b = -b;
        dot = -dot;
    }
    if dot > 1.0 - 1e-12 {
        let q = a.lerp(&b, s);
        return q / q.norm();
    }
    let theta = dot.min(1.0).acos();
    let sin_t = theta.sin();
    let wa = ((1.0 - s) * theta).sin() / sin_t;
    let wb = (s * theta).sin() / sin_t;
    let q = a * wa + b * wb;
    q / q.norm()
}

fn bracket(gt: &[PoseSample], t: f64) -> Result<usize> {
    let (start, end) = match (gt.first(), gt.last()) {
        (Some(a), Some(b)) => (a.t, b.t),
        _ => return Err(Error::InsufficientData("no poses to interpolate".into())),
    };
    if !(t >= start && t <= end) {
        return Err(Error::OutOfRange { t, start, end });
    }
    // index of the last sample with time <= t
    Ok(gt.partition_point(|p| p.t <= t).saturating_sub(1))
}

/// Pose at time `t`: positions and velocities linearly, orientation
/// spherically interpolated between the bracketing samples.
pub fn interpolate_pose(gt: &[PoseSample], t: f64) -> Result<PoseSample> {
    let i = bracket(gt, t)?;
    let a = &gt[i];
    if a.t == t || i + 1 == gt.len() {
        return Ok(PoseSample { t, ..*a });
    }
    let b = &gt[i + 1];
    let s = (t - a.t) / (b.t - a.t);
    let velocity = match (a.velocity, b.velocity) {
        (Some(va), Some(vb)) => Some(va.lerp(&vb, s)),
        _ => None,
    };
    Ok(PoseSample {
        t,
        position: a.position.lerp(&b.position, s),
        orientation: slerp(&a.orientation, &b.orientation, s),
        velocity,
    })
}

/// Interpolates the pose stream onto a sorted list of query times.
pub fn align_poses(gt: &[PoseSample], times: &[f64]) -> Result<Vec<PoseSample>> {
    times.iter().map(|&t| interpolate_pose(gt, t)).collect()
}

/// Fills velocities by finite differences of position: the three-point
/// central formula inside, three-point one-sided formulas at both ends.
/// All three are exact for quadratic motion, including on uneven spacing.
pub fn derive_velocity(gt: &[PoseSample]) -> Result<Vec<PoseSample>> {
    let n = gt.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "deriving velocity needs at least 3 poses, got {n}"
        )));
    }
    check_increasing(gt.iter().map(|p| p.t), "gt")?;
    let p = |i: usize| gt[i].position;
    let t = |i: usize| gt[i].t;
    let mut out = gt.to_vec();
    for (i, pose) in out.iter_mut().enumerate() {
        // Lagrange derivative at t(i) through three neighbouring samples.
        let (j0, j1, j2) = if i == 0 {
            (0, 1, 2)
        } else if i == n - 1 {
            (n - 3, n - 2, n - 1)
        } else {
            (i - 1, i, i + 1)
        };
        let x = t(i);
        let (x0, x1, x2) = (t(j0), t(j1), t(j2));
        let w0 = ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2));
        let w1 = ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2));
        let w2 = ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1));
        pose.velocity = Some(p(j0) * w0 + p(j1) * w1 + p(j2) * w2);
    }
    Ok(out)
}

/// Returns the poses with velocities present, deriving them if any is missing.
pub fn ensure_velocity(gt: &[PoseSample]) -> Result<Vec<PoseSample>> {
    if gt.iter().all(|p| p.velocity.is_some()) {
        Ok(gt.to_vec())
    } else {
        derive_velocity(gt)
    }
}

/// Labels each pose Stillness when `|v| < threshold`, Motion otherwise.
pub fn label_from_velocity(gt: &[PoseSample], threshold: f64) -> Result<Vec<(f64, MotionLabel)>> {
    if !(threshold > 0.0) {
        return Err(Error::Validation(format!("velocity threshold must be positive, got {threshold}")));
    }
    let gt = ensure_velocity(gt)?;
    Ok(gt
        .iter()
        .map(|p| {
            let speed = p.velocity.map(|v| v.norm()).unwrap_or(0.0);
            (p.t, MotionLabel::from_speed(speed, threshold))
        })
        .collect())
}

/// Ground-truth labels on the IMU clock: poses are interpolated at each IMU
/// timestamp, then thresholded. IMU samples outside the pose span take the
/// nearest pose.
pub fn imu_labels(seq: &Sequence, threshold: f64) -> Result<Vec<(f64, MotionLabel)>> {
    let gt = ensure_velocity(&seq.gt)?;
    let (g0, g1) = (gt[0].t, gt[gt.len() - 1].t);
    let times: Vec<f64> = seq.imu.iter().map(|s| s.t.clamp(g0, g1)).collect();
    let aligned = align_poses(&gt, &times)?;
    let mut labels = label_from_velocity(&aligned, threshold)?;
    for ((t, _), s) in labels.iter_mut().zip(&seq.imu) {
        *t = s.t;
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn pose(t: f64, x: f64) -> PoseSample {
        PoseSample {
            t,
            position: Vec3::new(x, 0.0, 0.0),
            orientation: Quat::identity(),
            velocity: None,
        }
    }

    fn yaw(angle: f64) -> Quat {
        Quat::new((angle / 2.0).cos(), 0.0, 0.0, (angle / 2.0).sin())
    }

    #[test]
    fn interpolation_is_identity_at_samples() {
        let gt = vec![pose(0.0, 1.0), pose(1.0, 2.0), pose(2.0, 5.0)];
        let p = interpolate_pose(&gt, 1.0).unwrap();
        assert_eq!(p, gt[1]);
    }

    #[test]
    fn interpolation_midpoint() {
        let gt = vec![pose(0.0, 0.0), pose(1.0, 1.0)];
        let p = interpolate_pose(&gt, 0.5).unwrap();
        assert_eq!(p.position, Vec3::new(0.5, 0.0, 0.0));
    }

    #[test]
    fn slerp_halfway_between_identity_and_quarter_turn() {
        let mut gt = vec![pose(0.0, 0.0), pose(1.0, 0.0)];
        gt[1].orientation = yaw(FRAC_PI_2);
        let q = interpolate_pose(&gt, 0.5).unwrap().orientation;
        let expected = yaw(FRAC_PI_2 / 2.0);
        assert!((q.coords - expected.coords).norm() < 1e-12);
    }

    #[test]
    fn query_outside_span_is_out_of_range() {
        let gt = vec![pose(0.0, 0.0), pose(1.0, 1.0)];
        assert!(matches!(interpolate_pose(&gt, 1.5), Err(Error::OutOfRange { .. })));
        assert!(matches!(interpolate_pose(&gt, -0.1), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn velocity_of_linear_motion() {
        let gt: Vec<_> = (0..50).map(|k| pose(k as f64 * 0.008, k as f64 * 0.008)).collect();
        for p in derive_velocity(&gt).unwrap() {
            assert!((p.velocity.unwrap() - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn velocity_of_quadratic_motion_is_exact() {
        let gt: Vec<_> = (0..40)
            .map(|k| {
                let t = k as f64 * 0.008;
                pose(t, t * t)
            })
            .collect();
        for p in derive_velocity(&gt).unwrap() {
            assert!((p.velocity.unwrap().x - 2.0 * p.t).abs() < 1e-9, "t={}", p.t);
        }
    }

    #[test]
    fn too_few_poses_for_velocity() {
        let gt = vec![pose(0.0, 0.0), pose(1.0, 1.0)];
        assert!(matches!(derive_velocity(&gt), Err(Error::InsufficientData(_))));
        assert!(matches!(label_from_velocity(&gt, 0.2), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn labels_at_and_around_threshold() {
        let mk = |speed: f64| PoseSample {
            velocity: Some(Vec3::new(0.0, speed, 0.0)),
            ..pose(0.0, 0.0)
        };
        let lab = |speed| label_from_velocity(&[mk(speed)], 0.2).unwrap()[0].1;
        assert_eq!(lab(0.0), MotionLabel::Stillness);
        assert_eq!(lab(0.3), MotionLabel::Motion);
        assert_eq!(lab(0.2), MotionLabel::Motion);
    }

    proptest! {
        #[test]
        fn raising_threshold_never_turns_stillness_into_motion(
            speeds in prop::collection::vec(0.0f64..2.0, 1..30),
            lo in 0.01f64..1.0,
            extra in 0.0f64..1.0,
        ) {
            let gt: Vec<_> = speeds
                .iter()
                .enumerate()
                .map(|(k, &s)| PoseSample { velocity: Some(Vec3::new(s, 0.0, 0.0)), ..pose(k as f64, 0.0) })
                .collect();
            let a = label_from_velocity(&gt, lo).unwrap();
            let b = label_from_velocity(&gt, lo + extra).unwrap();
            for ((_, la), (_, lb)) in a.iter().zip(&b) {
                if *la == MotionLabel::Stillness {
                    prop_assert_eq!(*lb, MotionLabel::Stillness);
                }
            }
        }

        #[test]
        fn constant_position_has_zero_velocity(n in 3usize..40, x in -10.0f64..10.0, dt in 0.001f64..0.1) {
            let gt: Vec<_> = (0..n).map(|k| pose(k as f64 * dt, x)).collect();
            for p in derive_velocity(&gt).unwrap() {
                prop_assert!(p.velocity.unwrap().norm() < 1e-9);
            }
        }

        #[test]
        fn interpolation_is_continuous(x0 in -5.0f64..5.0, x1 in -5.0f64..5.0, s in 0.0f64..1.0) {
            let gt = vec![pose(0.0, x0), pose(1.0, x1)];
            let a = interpolate_pose(&gt, s).unwrap().position.x;
            let b = interpolate_pose(&gt, (s + 1e-9).min(1.0)).unwrap().position.x;
            prop_assert!((a - b).abs() < 1e-7);
        }
    }
}
