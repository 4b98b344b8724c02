//! Synthetic trajectories with closed-form kinematics and the IMU/pose
//! streams sampled from them.

use std::f64::consts::{PI, TAU};

use nalgebra::UnitQuaternion;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::domain::{ImuSample, MotionLabel, PoseSample, Quat, Sequence, Vec3, DEFAULT_VELOCITY_THRESHOLD};
use crate::error::{Error, Result};

pub const DEFAULT_IMU_RATE: f64 = 500.0;
pub const DEFAULT_GT_RATE: f64 = 125.0;
pub const STANDARD_GRAVITY: f64 = 9.81;

/// Duration over which a velocity mismatch between consecutive segments is
/// blended away, seconds.
pub const BLEND_TIME: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SegmentKind {
    Still,
    ConstVel {
        velocity: Vec3,
    },
    /// `x(t) = amplitude * sin(2π f t)` along `axis` (normalized on use).
    Oscillate {
        axis: Vec3,
        amplitude: f64,
        frequency: f64,
    },
    TurnInPlace {
        yaw_rate: f64,
    },
    /// Constant velocity with a vertical step bob, the gait-structured
    /// acceleration of walking.
    Walk {
        velocity: Vec3,
        bob_amplitude: f64,
        step_frequency: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration: f64,
    #[serde(flatten)]
    pub kind: SegmentKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionProfile {
    pub segments: Vec<Segment>,
}

impl MotionProfile {
    pub fn new(segments: Vec<Segment>) -> Self {
        Self { segments }
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::Validation("motion profile has no segments".into()));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.duration > 0.0) || !s.duration.is_finite() {
                return Err(Error::Validation(format!(
                    "segment {i} ({}) has duration {}, must be > 0",
                    s.kind.name(),
                    s.duration
                )));
            }
            let bad = match s.kind {
                SegmentKind::Still => None,
                SegmentKind::ConstVel { velocity } => (!velocity.iter().all(|v| v.is_finite())).then_some("velocity"),
                SegmentKind::Oscillate {
                    axis,
                    amplitude,
                    frequency,
                } => {
                    if axis.norm() == 0.0 || !axis.norm().is_finite() {
                        Some("axis")
                    } else if !(amplitude >= 0.0) {
                        Some("amplitude")
                    } else if !(frequency > 0.0) {
                        Some("frequency")
                    } else {
                        None
                    }
                }
                SegmentKind::TurnInPlace { yaw_rate } => (!yaw_rate.is_finite()).then_some("yaw_rate"),
                SegmentKind::Walk {
                    velocity,
                    bob_amplitude,
                    step_frequency,
                } => {
                    if !velocity.iter().all(|v| v.is_finite()) {
                        Some("velocity")
                    } else if !(bob_amplitude >= 0.0) {
                        Some("bob_amplitude")
                    } else if !(step_frequency > 0.0) {
                        Some("step_frequency")
                    } else {
                        None
                    }
                }
            };
            if let Some(field) = bad {
                return Err(Error::Validation(format!("segment {i} ({}) has invalid {field}", s.kind.name())));
            }
        }
        Ok(())
    }
}

impl SegmentKind {
    pub fn name(&self) -> &'static str {
        match self {
            SegmentKind::Still => "still",
            SegmentKind::ConstVel { .. } => "const_vel",
            SegmentKind::Oscillate { .. } => "oscillate",
            SegmentKind::TurnInPlace { .. } => "turn_in_place",
            SegmentKind::Walk { .. } => "walk",
        }
    }

    /// Local displacement, velocity and acceleration at `tau` seconds into
    /// the segment; displacement is zero at `tau = 0`.
    fn base(&self, tau: f64) -> (Vec3, Vec3, Vec3) {
        match *self {
            SegmentKind::Still | SegmentKind::TurnInPlace { .. } => (Vec3::zeros(), Vec3::zeros(), Vec3::zeros()),
            SegmentKind::ConstVel { velocity } => (velocity * tau, velocity, Vec3::zeros()),
            SegmentKind::Oscillate {
                axis,
                amplitude,
                frequency,
            } => {
                let dir = axis.normalize();
                let w = TAU * frequency;
                let (s, c) = (w * tau).sin_cos();
                (dir * (amplitude * s), dir * (amplitude * w * c), dir * (-amplitude * w * w * s))
            }
            SegmentKind::Walk {
                velocity,
                bob_amplitude,
                step_frequency,
            } => {
                let w = TAU * step_frequency;
                let (s, c) = (w * tau).sin_cos();
                let up = Vec3::z();
                (
                    velocity * tau + up * (bob_amplitude * s),
                    velocity + up * (bob_amplitude * w * c),
                    up * (-bob_amplitude * w * w * s),
                )
            }
        }
    }
}

/// Continuous-time kinematics of a rigid body: world-frame position,
/// velocity and acceleration plus body-to-world orientation.
pub trait Kinematics {
    fn duration(&self) -> f64;
    fn position(&self, t: f64) -> Vec3;
    fn velocity(&self, t: f64) -> Vec3;
    fn acceleration(&self, t: f64) -> Vec3;
    fn orientation(&self, t: f64) -> UnitQuaternion<f64>;
}

#[derive(Debug, Clone)]
struct CompiledSegment {
    start: f64,
    duration: f64,
    kind: SegmentKind,
    origin: Vec3,
    blend_dv: Vec3,
    blend_time: f64,
    yaw0: f64,
}

impl CompiledSegment {
    /// Smooth velocity correction `dv * (1 - 3s² + 2s³)` over the blend,
    /// with its integral and derivative. Zero acceleration at both ends.
    fn blend(&self, tau: f64) -> (Vec3, Vec3, Vec3) {
        let tb = self.blend_time;
        if tb <= 0.0 {
            return (Vec3::zeros(), Vec3::zeros(), Vec3::zeros());
        }
        let dv = self.blend_dv;
        if tau >= tb {
            return (dv * (0.5 * tb), Vec3::zeros(), Vec3::zeros());
        }
        let s = tau / tb;
        let s2 = s * s;
        let pos = dv * (tb * (s - s2 * s + 0.5 * s2 * s2));
        let vel = dv * (1.0 - 3.0 * s2 + 2.0 * s2 * s);
        let acc = dv * ((6.0 * s2 - 6.0 * s) / tb);
        (pos, vel, acc)
    }

    fn state(&self, tau: f64) -> (Vec3, Vec3, Vec3) {
        let (bp, bv, ba) = self.kind.base(tau);
        let (cp, cv, ca) = self.blend(tau);
        (self.origin + bp + cp, bv + cv, ba + ca)
    }

    fn yaw(&self, tau: f64) -> f64 {
        match self.kind {
            SegmentKind::TurnInPlace { yaw_rate } => self.yaw0 + yaw_rate * tau,
            _ => self.yaw0,
        }
    }
}

/// A [`MotionProfile`] resolved into absolute segment start states.
///
/// Each segment's own kinematics start where the previous one ended; any
/// velocity mismatch at the boundary is removed by a smooth blend, so
/// position and velocity are continuous everywhere.
#[derive(Debug, Clone)]
pub struct ProfileTrajectory {
    segments: Vec<CompiledSegment>,
    total: f64,
}

impl ProfileTrajectory {
    pub fn new(profile: &MotionProfile) -> Result<Self> {
        Self::with_initial(profile, Vec3::zeros(), Vec3::zeros(), 0.0)
    }

    pub fn with_initial(profile: &MotionProfile, position: Vec3, velocity: Vec3, yaw: f64) -> Result<Self> {
        profile.validate()?;
        let mut segments = Vec::with_capacity(profile.segments.len());
        let (mut origin, mut vel, mut yaw0, mut start) = (position, velocity, yaw, 0.0);
        for seg in &profile.segments {
            let (_, v0, _) = seg.kind.base(0.0);
            let compiled = CompiledSegment {
                start,
                duration: seg.duration,
                kind: seg.kind,
                origin,
                blend_dv: vel - v0,
                blend_time: BLEND_TIME,
                yaw0,
            };
            let (p_end, v_end, _) = compiled.state(seg.duration);
            yaw0 = compiled.yaw(seg.duration);
            origin = p_end;
            vel = v_end;
            start += seg.duration;
            segments.push(compiled);
        }
        Ok(Self { segments, total: start })
    }

    fn locate(&self, t: f64) -> (&CompiledSegment, f64) {
        let idx = self
            .segments
            .partition_point(|s| s.start <= t)
            .saturating_sub(1)
            .min(self.segments.len() - 1);
        let seg = &self.segments[idx];
        (seg, (t - seg.start).clamp(0.0, seg.duration))
    }

    /// Segment boundaries, useful for integrators that must not straddle
    /// acceleration discontinuities.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.segments.iter().map(|s| s.start).collect();
        b.push(self.total);
        b
    }
}

impl Kinematics for ProfileTrajectory {
    fn duration(&self) -> f64 {
        self.total
    }

    fn position(&self, t: f64) -> Vec3 {
        let (s, tau) = self.locate(t);
        s.state(tau).0
    }

    fn velocity(&self, t: f64) -> Vec3 {
        let (s, tau) = self.locate(t);
        s.state(tau).1
    }

    fn acceleration(&self, t: f64) -> Vec3 {
        let (s, tau) = self.locate(t);
        s.state(tau).2
    }

    fn orientation(&self, t: f64) -> UnitQuaternion<f64> {
        let (s, tau) = self.locate(t);
        UnitQuaternion::from_axis_angle(&Vec3::z_axis(), s.yaw(tau))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorNoiseSpec {
    /// Standard deviation of white accelerometer noise per axis, m/s².
    pub accel_noise_sigma: f64,
    /// Constant body-frame accelerometer bias, m/s².
    pub accel_bias: Vec3,
    /// World-frame gravity vector, m/s².
    pub gravity: Vec3,
    pub seed: u64,
}

impl Default for SensorNoiseSpec {
    fn default() -> Self {
        Self::noiseless()
    }
}

impl SensorNoiseSpec {
    pub fn noiseless() -> Self {
        Self {
            accel_noise_sigma: 0.0,
            accel_bias: Vec3::zeros(),
            gravity: Vec3::new(0.0, 0.0, -STANDARD_GRAVITY),
            seed: 0,
        }
    }
}

fn sample_times(duration: f64, rate: f64) -> Vec<f64> {
    let n = (duration * rate + 1e-9).floor() as usize;
    (0..=n).map(|k| k as f64 / rate).collect()
}

/// Samples IMU readings, ground-truth poses and stillness labels from
/// continuous kinematics.
///
/// The accelerometer measures `R(q)ᵀ (a - g) + bias + noise`; labels use
/// the exact speed at each IMU timestamp against the default threshold.
pub fn generate_from_kinematics<K: Kinematics>(
    name: &str,
    kin: &K,
    noise: &SensorNoiseSpec,
    imu_rate: f64,
    gt_rate: f64,
) -> Result<Sequence> {
    if !(imu_rate > 0.0) || !(gt_rate > 0.0) {
        return Err(Error::Validation(format!(
            "sample rates must be positive (imu {imu_rate} Hz, gt {gt_rate} Hz)"
        )));
    }
    if !(noise.accel_noise_sigma >= 0.0) {
        return Err(Error::Validation("accelerometer noise sigma must be >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let normal = Normal::new(0.0, noise.accel_noise_sigma.max(0.0))
        .map_err(|e| Error::Validation(format!("noise distribution: {e}")))?;
    let duration = kin.duration();
    let gt_times = sample_times(duration, gt_rate);
    // IMU samples stay inside the pose stream so every one can be aligned.
    let gt_end = gt_times.last().copied().unwrap_or(0.0);

    let mut imu = Vec::new();
    let mut labels = Vec::new();
    for t in sample_times(duration, imu_rate).into_iter().filter(|&t| t <= gt_end) {
        let q = kin.orientation(t);
        let specific_force = kin.acceleration(t) - noise.gravity;
        let mut accel = q.inverse_transform_vector(&specific_force) + noise.accel_bias;
        if noise.accel_noise_sigma > 0.0 {
            for v in accel.iter_mut() {
                *v += normal.sample(&mut rng);
            }
        }
        imu.push(ImuSample { t, accel });
        let speed = kin.velocity(t).norm();
        labels.push((t, MotionLabel::from_speed(speed, DEFAULT_VELOCITY_THRESHOLD)));
    }

    let gt = gt_times
        .into_iter()
        .map(|t| {
            let q = kin.orientation(t);
            PoseSample {
                t,
                position: kin.position(t),
                orientation: *q.quaternion(),
                velocity: Some(kin.velocity(t)),
            }
        })
        .collect();

    let seq = Sequence {
        name: name.to_string(),
        imu,
        gt,
        labels: Some(labels),
    };
    seq.validate()?;
    Ok(seq)
}

pub fn generate_sequence(
    name: &str,
    profile: &MotionProfile,
    noise: &SensorNoiseSpec,
    imu_rate: f64,
    gt_rate: f64,
) -> Result<Sequence> {
    let traj = ProfileTrajectory::new(profile)?;
    generate_from_kinematics(name, &traj, noise, imu_rate, gt_rate)
}

/// A synthetic study participant: a motion profile with their own gait
/// style and their own sensor imperfections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectSpec {
    pub name: String,
    pub profile: MotionProfile,
    pub noise: SensorNoiseSpec,
}

/// Per-subject movement style.
#[derive(Debug, Clone, Copy)]
struct Style {
    speed: (f64, f64),
    step_frequency: (f64, f64),
    bob: (f64, f64),
    still: (f64, f64),
    motion: (f64, f64),
}

/// Builds `count` subjects of `duration` seconds each.
///
/// Profiles alternate standing (plain, turning the head/body in place, or
/// leaning slowly) with moving (walking in a random direction, or pacing
/// sideways and backwards). Each subject gets a distinct gait style, noise
/// level and bias so that a held-out subject is a genuinely unseen person.
pub fn synthetic_subjects(count: usize, duration: f64, seed: u64) -> Vec<SubjectSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let style = Style {
                speed: (rng.random_range(0.5..0.8), rng.random_range(1.0..1.5)),
                step_frequency: (rng.random_range(1.5..1.8), rng.random_range(1.9..2.3)),
                bob: (rng.random_range(0.015..0.025), rng.random_range(0.03..0.05)),
                still: (1.0, rng.random_range(2.5..4.0)),
                motion: (2.0, rng.random_range(4.0..6.0)),
            };
            let profile = random_profile(&mut rng, &style, duration);
            let noise = SensorNoiseSpec {
                accel_noise_sigma: rng.random_range(0.03..0.08),
                accel_bias: Vec3::new(
                    rng.random_range(-0.15..0.15),
                    rng.random_range(-0.15..0.15),
                    rng.random_range(-0.15..0.15),
                ),
                gravity: Vec3::new(0.0, 0.0, -STANDARD_GRAVITY),
                seed: rng.random(),
            };
            SubjectSpec {
                name: format!("subject{}", k + 1),
                profile,
                noise,
            }
        })
        .collect()
}

fn random_profile(rng: &mut ChaCha8Rng, style: &Style, duration: f64) -> MotionProfile {
    let mut segments = Vec::new();
    let mut total = 0.0;
    let mut moving = false;
    while total < duration {
        let seg = if moving {
            let d = rng.random_range(style.motion.0..style.motion.1);
            let heading = rng.random_range(-PI..PI);
            if rng.random_bool(0.8) {
                let speed = rng.random_range(style.speed.0..style.speed.1);
                Segment {
                    duration: d,
                    kind: SegmentKind::Walk {
                        velocity: Vec3::new(speed * heading.cos(), speed * heading.sin(), 0.0),
                        bob_amplitude: rng.random_range(style.bob.0..style.bob.1),
                        step_frequency: rng.random_range(style.step_frequency.0..style.step_frequency.1),
                    },
                }
            } else {
                Segment {
                    duration: d,
                    kind: SegmentKind::Oscillate {
                        axis: Vec3::new(heading.cos(), heading.sin(), 0.0),
                        amplitude: rng.random_range(0.3..0.5),
                        frequency: rng.random_range(0.5..0.8),
                    },
                }
            }
        } else {
            let d = rng.random_range(style.still.0..style.still.1);
            let r: f64 = rng.random();
            let kind = if r < 0.5 {
                SegmentKind::Still
            } else if r < 0.8 {
                SegmentKind::TurnInPlace {
                    yaw_rate: rng.random_range(0.4..1.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 },
                }
            } else {
                let heading = rng.random_range(-PI..PI);
                // Slow lean: peak speed well under the stillness threshold.
                SegmentKind::Oscillate {
                    axis: Vec3::new(heading.cos(), heading.sin(), 0.0),
                    amplitude: rng.random_range(0.01..0.03),
                    frequency: rng.random_range(0.3..0.6),
                }
            };
            Segment { duration: d, kind }
        };
        total += seg.duration;
        segments.push(seg);
        moving = !moving;
    }
    MotionProfile::new(segments)
}

/// Quaternion for a yaw angle about world z.
pub fn yaw_quat(yaw: f64) -> Quat {
    *UnitQuaternion::from_axis_angle(&Vec3::z_axis(), yaw).quaternion()
}
